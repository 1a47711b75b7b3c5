"""Names, excludes, wire codecs, and the matching predicate."""

from __future__ import annotations

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndnshield.packets import (
    AnswerOrigin,
    BloomExclude,
    DataPacket,
    EmbeddedKey,
    ExplicitExclude,
    Interest,
    KeyName,
    Name,
    NameParseError,
    canonical_serialize,
    component_digest,
    decode_data,
    decode_interest,
    digest_component,
    encode_data,
    encode_interest,
    interest_matches,
    is_digest_component,
    is_prefix_of,
    parse_name,
    wire_size,
)

components = st.binary(min_size=1, max_size=32)
names = st.lists(components, min_size=0, max_size=8).map(lambda cs: Name(tuple(cs)))


# ---------------------------------------------------------------------------
# Names
# ---------------------------------------------------------------------------


def test_parse_news_style_name():
    name = parse_name("/ndn/cnn/news/2012may20")
    assert name.components == (b"ndn", b"cnn", b"news", b"2012may20")


def test_parse_empty_forms():
    assert parse_name("").components == ()
    assert parse_name("/").components == ()
    assert str(Name(())) == "/"


def test_parse_fragment_name():
    name = parse_name("/ndn/youtube/alice/video-749.avi/137")
    assert len(name) == 5
    assert name.last == b"137"


def test_parse_rejects_malformed_escape():
    with pytest.raises(NameParseError):
        parse_name("/abc%Z1")
    with pytest.raises(NameParseError):
        parse_name("/abc%2")


def test_parse_rejects_oversized_component():
    with pytest.raises(NameParseError):
        Name((b"x" * 256,))


def test_parse_rejects_missing_leading_slash():
    with pytest.raises(NameParseError):
        parse_name("ndn/cnn")


def test_escaping_round_trip():
    name = Name((b"a/b", b"%25", bytes(range(0, 32)), b"\xff\xfe"))
    assert parse_name(str(name)) == name


@given(names)
def test_name_text_round_trip(name):
    assert parse_name(str(name)) == name


def test_prefix_basics():
    assert is_prefix_of(parse_name("/ndn/cnn"), parse_name("/ndn/cnn/news"))
    assert not is_prefix_of(parse_name("/ndn/cnn"), parse_name("/ndn/cn"))
    n = parse_name("/a/b")
    assert is_prefix_of(n, n)
    assert is_prefix_of(Name(()), n)


@given(names, names, names)
def test_prefix_transitive(a, b, c):
    ab = a.join(b)
    abc = ab.join(c)
    assert a.is_prefix_of(ab)
    assert ab.is_prefix_of(abc)
    assert a.is_prefix_of(abc)


# ---------------------------------------------------------------------------
# Exclude filters
# ---------------------------------------------------------------------------


def test_explicit_exclude():
    ex = ExplicitExclude(frozenset({b"bad"}))
    assert ex.excludes(b"bad")
    assert not ex.excludes(b"good")


def test_bloom_contains_inserted():
    ex = BloomExclude.from_components([b"one", b"two"])
    assert ex.excludes(b"one")
    assert ex.excludes(b"two")


def test_bloom_all_ones_excludes_everything():
    ex = BloomExclude.all_ones()
    for comp in (b"a", b"zz", bytes(31), b"\x01" + bytes(32)):
        assert ex.excludes(comp)


def test_bloom_mostly_rejects_absent():
    ex = BloomExclude.from_components([b"present"])
    hits = sum(ex.excludes(b"absent-%d" % i) for i in range(200))
    assert hits <= 2  # k=4 probes against 4 set bits: false positives are rare


# ---------------------------------------------------------------------------
# Wire codecs
# ---------------------------------------------------------------------------


def _packet(name=b"x", payload=b"hello", sig=b"s" * 128):
    return DataPacket(
        name=Name((name, digest_component(bytes(32)))),
        payload=payload,
        signature=sig,
        key_locator=EmbeddedKey(b"KEYDER"),
        publisher_key_digest=bytes(32),
    )


def test_serialize_deterministic():
    assert canonical_serialize(_packet()) == canonical_serialize(_packet())


def test_serialize_payload_injective():
    a = _packet(payload=b"hello")
    b = _packet(payload=b"hellp")
    assert canonical_serialize(a) != canonical_serialize(b)


def test_to_be_signed_image_excludes_signature():
    # Walk the encoding with an independent reader and confirm the signature
    # bytes are absent from the unsigned image and present in the full one.
    pkt = _packet(sig=b"\xabSIGNATURE" * 12)

    def fields(buf):
        out = []
        pos = 0
        (count,) = struct.unpack_from(">I", buf, pos)
        pos += 4
        for _ in range(count):
            (ln,) = struct.unpack_from(">I", buf, pos)
            pos += 4
            out.append(buf[pos : pos + ln])
            pos += ln
        (ln,) = struct.unpack_from(">I", buf, pos)  # payload
        pos += 4
        out.append(buf[pos : pos + ln])
        pos += ln
        tag = buf[pos]
        pos += 1
        assert tag == 0
        (ln,) = struct.unpack_from(">I", buf, pos)  # embedded key
        pos += 4
        out.append(buf[pos : pos + ln])
        pos += ln
        (ln,) = struct.unpack_from(">I", buf, pos)  # publisher digest
        pos += 4
        out.append(buf[pos : pos + ln])
        pos += ln
        while pos < len(buf):
            (ln,) = struct.unpack_from(">I", buf, pos)
            pos += 4
            out.append(buf[pos : pos + ln])
            pos += ln
        return out

    unsigned = canonical_serialize(pkt, include_hash_component=False, include_signature=False)
    signed = canonical_serialize(pkt, include_hash_component=False, include_signature=True)
    assert pkt.signature in fields(signed)
    assert pkt.signature not in fields(unsigned)
    assert pkt.signature not in unsigned


def test_data_round_trip():
    pkt = _packet()
    assert decode_data(encode_data(pkt)) == pkt


def test_data_round_trip_key_name_locator():
    pkt = DataPacket(
        name=Name((b"n",)),
        payload=b"p",
        signature=b"sig",
        key_locator=KeyName(parse_name("/keys/1")),
        publisher_key_digest=bytes(32),
    )
    assert decode_data(encode_data(pkt)) == pkt


def _interest(**kw):
    defaults = dict(name=parse_name("/ndn/cnn"), nonce=7)
    defaults.update(kw)
    return Interest(**defaults)


@given(
    names,
    st.integers(min_value=0, max_value=2 ** 64 - 1),
    st.one_of(st.none(), st.binary(min_size=32, max_size=32)),
    st.one_of(
        st.none(),
        st.frozensets(components, max_size=4).map(ExplicitExclude),
        st.just(BloomExclude.all_ones()),
    ),
    st.sampled_from(AnswerOrigin),
    st.one_of(st.none(), st.integers(min_value=0, max_value=255)),
)
@settings(max_examples=60)
def test_interest_round_trip(name, nonce, digest, exclude, origin, scope):
    interest = Interest(name, nonce, digest, exclude, origin, scope, lifetime_ms=4000)
    assert decode_interest(encode_interest(interest)) == interest


def test_wire_size_positive():
    assert wire_size(_interest()) > 0
    assert wire_size(_packet()) > len(_packet().payload)


def test_data_wire_golden_vector():
    """Bit-exact wire contract: the encoding is hand-assembled here from the
    documented layout (32-bit big-endian counts and lengths) and must match
    the encoder byte for byte."""
    pkt = DataPacket(
        name=Name((b"ab", b"c")),
        payload=b"PAY",
        signature=b"SG",
        key_locator=EmbeddedKey(b"K"),
        publisher_key_digest=bytes(range(32)),
    )
    expected = b"".join([
        struct.pack(">I", 2),                      # name component count
        struct.pack(">I", 2), b"ab",
        struct.pack(">I", 1), b"c",
        struct.pack(">I", 3), b"PAY",              # payload
        b"\x00",                                   # key locator tag: embedded
        struct.pack(">I", 1), b"K",
        struct.pack(">I", 32), bytes(range(32)),   # publisher key digest
        struct.pack(">I", 2), b"SG",               # signature
    ])
    assert encode_data(pkt) == expected
    assert canonical_serialize(pkt, include_hash_component=False, include_signature=False) == (
        expected[: 4 + 4 + 2]                      # name count + first component
        .replace(struct.pack(">I", 2), struct.pack(">I", 1), 1)  # one component fewer
        + expected[4 + 4 + 2 + 4 + 1 : -6]         # skip 2nd comp, drop signature block
    )


def test_interest_wire_golden_vector():
    interest = Interest(
        name=Name((b"x",)),
        nonce=0x0102030405060708,
        publisher_key_digest=None,
        exclude=None,
        answer_origin=AnswerOrigin.ANY,
        scope=2,
        lifetime_ms=4000,
    )
    expected = b"".join([
        struct.pack(">I", 1),                      # name component count
        struct.pack(">I", 1), b"x",
        struct.pack(">Q", 0x0102030405060708),     # nonce
        b"\x04",                                   # flags: scope present
        b"\x00",                                   # answer origin: any
        b"\x02",                                   # scope
        struct.pack(">I", 4000),                   # lifetime
    ])
    assert encode_interest(interest) == expected


# ---------------------------------------------------------------------------
# Digest-typed components
# ---------------------------------------------------------------------------


def test_digest_component_round_trip():
    comp = digest_component(b"\x11" * 32)
    assert is_digest_component(comp)
    assert component_digest(comp) == b"\x11" * 32
    assert not is_digest_component(b"\x11" * 33)  # wrong tag
    assert not is_digest_component(b"\x01" + b"x" * 31)  # wrong length


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def test_prefix_rule_matches():
    data = DataPacket(
        name=parse_name("/ndn/cnn/news/2012may20"),
        payload=b"",
        signature=b"s",
        key_locator=EmbeddedKey(b"k"),
        publisher_key_digest=bytes(32),
    )
    assert interest_matches(data, _interest(name=parse_name("/ndn/cnn")))
    assert not interest_matches(data, _interest(name=parse_name("/bbc")))


def test_random_key_digest_matches_nothing():
    data = _packet()
    wanted = _interest(name=Name((b"x",)), publisher_key_digest=b"\x55" * 32)
    assert not interest_matches(data, wanted)


def test_all_ones_bloom_self_contradictory():
    # Requesting /prefix while excluding every next component can never match.
    data = _packet(name=b"prefix")
    blocked = _interest(name=parse_name("/prefix"), exclude=BloomExclude.all_ones())
    assert not interest_matches(data, blocked)


def test_exclude_applies_to_next_component_only():
    data = _packet(name=b"prefix")  # name: /prefix/<digest-component>
    hash_comp = data.name.components[-1]
    hit = _interest(name=parse_name("/prefix"), exclude=ExplicitExclude(frozenset({hash_comp})))
    miss = _interest(name=parse_name("/prefix"), exclude=ExplicitExclude(frozenset({b"other"})))
    assert not interest_matches(data, hit)
    assert interest_matches(data, miss)


@given(
    names,
    st.one_of(st.none(), st.binary(min_size=32, max_size=32)),
    st.one_of(st.none(), st.frozensets(components, max_size=3).map(ExplicitExclude)),
    st.booleans(),
)
@settings(max_examples=80)
def test_matching_monotone_in_options(name, digest, exclude, strip_hash):
    """Removing any optional constraint never turns a match into a miss."""
    data = DataPacket(
        name=name.child(b"seg").child(digest_component(b"\x3c" * 32)),
        payload=b"payload",
        signature=b"sig",
        key_locator=EmbeddedKey(b"key"),
        publisher_key_digest=b"\x77" * 32,
    )
    interest_name = name if strip_hash else name.child(b"seg")
    full = Interest(interest_name, nonce=1, publisher_key_digest=digest, exclude=exclude)
    if interest_matches(data, full):
        for relaxed in (
            Interest(interest_name, 1, None, exclude),
            Interest(interest_name, 1, digest, None),
            Interest(interest_name, 1, None, None),
        ):
            assert interest_matches(data, relaxed)

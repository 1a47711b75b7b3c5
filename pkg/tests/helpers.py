"""Shared fixtures-by-hand for the unit suites."""

from __future__ import annotations

from ndnshield.crypto import KeyPair, sign_packet
from ndnshield.packets import Name, parse_name
from ndnshield.rand import Rng
from ndnshield.router import IfaceInfo, Router

_KEYS: dict[str, KeyPair] = {}


def make_key(label: str = "k") -> KeyPair:
    if label not in _KEYS:
        _KEYS[label] = KeyPair.generate(Rng(99, f"testkey:{label}"))
    return _KEYS[label]


def make_packet(name: str, key: KeyPair | None = None, payload: bytes = b"data"):
    return sign_packet(parse_name(name), payload, key or make_key())


def iface_info(iface: int, broadcast: bool = False, bandwidth: float = 1e8) -> IfaceInfo:
    return IfaceInfo(
        iface=iface,
        link_id=iface,
        bandwidth_bps=bandwidth,
        delay_us=1000,
        broadcast=broadcast,
        link_key=bytes([iface]) * 32,
        peers=(),
    )


def make_router(n_ifaces: int = 3, **kwargs) -> Router:
    router = Router("r", rng=Rng(7, "router"), **kwargs)
    for i in range(n_ifaces):
        router.attach_iface(iface_info(i))
    return router


def n(text: str) -> Name:
    return parse_name(text)

"""Signals exchanged between federates and the RTI."""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

from .tags import Tag

RTI = -1


class SignalKind(str, Enum):
    MSG = "MSG"
    LTC = "LTC"
    NET = "NET"
    TAG = "TAG"
    DNET = "DNET"


TO_RTI = frozenset({SignalKind.LTC, SignalKind.NET})
FROM_RTI = frozenset({SignalKind.TAG, SignalKind.DNET})


class Signal(NamedTuple):
    """One protocol signal.

    ``src``/``dst`` are federate ids or :data:`RTI`. A message travels twice:
    federate -> RTI and RTI -> federate; both hops carry the original
    endpoints in ``origin``/``target`` so the RTI can route it.
    """

    kind: SignalKind
    tag: Tag
    src: int
    dst: int
    body: bytes = b""
    origin: int = RTI
    target: int = RTI


class ProtocolError(RuntimeError):
    """A detected violation of the coordination protocol."""

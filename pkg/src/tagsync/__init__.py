"""Centralized logical-time coordination with DNET-based NET suppression."""

from .tags import FOREVER, M_MAX, NEVER, Tag, delay_to_tag, tag_add, tag_cmp, tag_subtract
from .topology import Connection, Topology, build

__all__ = [
    "FOREVER",
    "M_MAX",
    "NEVER",
    "Tag",
    "delay_to_tag",
    "tag_add",
    "tag_cmp",
    "tag_subtract",
    "Connection",
    "Topology",
    "build",
]

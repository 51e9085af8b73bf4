"""Superdense logical tags and the saturating tag functions.

A tag is a pair ``(time, microstep)``. Time values are 64-bit signed
nanoseconds where the extreme values stand for the limits ``NEVER`` and
``FOREVER``; microsteps are 32-bit unsigned. Tags compare lexicographically,
which is exactly tuple ordering, so :class:`Tag` is a ``NamedTuple``.
"""

from __future__ import annotations

from typing import NamedTuple

NEVER_TIME = -(2**63)
FOREVER_TIME = 2**63 - 1
M_MAX = 2**32 - 1


class _TagFields(NamedTuple):
    time: int
    microstep: int


class Tag(_TagFields):
    """Immutable superdense tag.

    Only ``(NEVER, 0)`` and ``(FOREVER, M_MAX)`` are admitted as limit tags.
    """

    __slots__ = ()

    def __new__(cls, time: int, microstep: int = 0) -> Tag:
        if not 0 <= microstep <= M_MAX:
            raise ValueError(f"microstep out of range: {microstep}")
        if time == NEVER_TIME:
            if microstep != 0:
                raise ValueError("NEVER tag must have microstep 0")
        elif time == FOREVER_TIME:
            if microstep != M_MAX:
                raise ValueError("FOREVER tag must have microstep M_MAX")
        elif not 0 <= time < FOREVER_TIME:
            raise ValueError(f"time value out of range: {time}")
        return _TagFields.__new__(cls, time, microstep)

    def __str__(self) -> str:
        return f"({format_time(self.time)},{self.microstep})"

    __repr__ = __str__

    @property
    def is_never(self) -> bool:
        return self.time == NEVER_TIME

    @property
    def is_forever(self) -> bool:
        return self.time == FOREVER_TIME


def _mk(time: int, microstep: int) -> Tag:
    # Unchecked constructor for hot paths whose results are valid by construction.
    return tuple.__new__(Tag, (time, microstep))


NEVER = _mk(NEVER_TIME, 0)
FOREVER = _mk(FOREVER_TIME, M_MAX)
ZERO = _mk(0, 0)


def format_time(t: int) -> str:
    if t == NEVER_TIME:
        return "NEVER"
    if t == FOREVER_TIME:
        return "FOREVER"
    return str(t)


def tag_cmp(a: Tag, b: Tag) -> int:
    """Three-way comparison: -1, 0 or 1."""
    return (a > b) - (a < b)


def tag_add(a: Tag, b: Tag) -> Tag:
    """Tag addition ``A(a, b)`` with saturation.

    When ``b`` has a positive time value the result carries ``b``'s
    microstep and ``a``'s microstep is dropped.
    """
    ta, ma = a
    tb, mb = b
    if ta == NEVER_TIME or tb == NEVER_TIME:
        return NEVER
    if ta == FOREVER_TIME:
        return FOREVER
    if tb == 0:
        m = ma + mb
        return _mk(ta, m if m < M_MAX else M_MAX)
    # tb > 0: checked addition, never wraps
    if tb >= FOREVER_TIME - ta:
        return FOREVER
    return _mk(ta + tb, mb)


def delay_to_tag(d: int) -> Tag:
    """Convert an after-delay time value to a tag increment ``C(d)``.

    ``NEVER`` encodes "no delay" and maps to ``(0, 0)``; a zero delay still
    advances one microstep.
    """
    if d == NEVER_TIME:
        return ZERO
    if d == FOREVER_TIME:
        return FOREVER
    if d == 0:
        return _mk(0, 1)
    if d < 0:
        raise ValueError(f"negative delay: {d}")
    return _mk(d, 0)


def tag_subtract(a: Tag, b: Tag) -> Tag:
    """Latest tag ``g`` such that ``tag_add(g, b) <= a``.

    ``b`` must not be a limit tag.
    """
    tb, mb = b
    if tb == NEVER_TIME or tb == FOREVER_TIME:
        raise ValueError(f"subtrahend must not be a limit tag: {b}")
    ta, ma = a
    if ta == FOREVER_TIME:
        return FOREVER
    if ta == NEVER_TIME or a < b:
        return NEVER
    if ma >= mb:
        if tb == 0:
            # A saturated microstep absorbs any increment.
            return _mk(ta, M_MAX if ma == M_MAX else ma - mb)
        return _mk(ta - tb, M_MAX)
    # ma < mb and a >= b imply ta > tb
    return _mk(ta - tb - 1, M_MAX)


def tag_successor(g: Tag) -> Tag:
    """Smallest tag strictly greater than ``g`` (limits are fixed points)."""
    t, m = g
    if t == NEVER_TIME:
        return ZERO
    if t == FOREVER_TIME:
        return FOREVER
    if m < M_MAX:
        return _mk(t, m + 1)
    if t + 1 >= FOREVER_TIME:
        return FOREVER
    return _mk(t + 1, 0)


def tag_predecessor(g: Tag) -> Tag:
    """Largest tag strictly smaller than ``g`` (limits are fixed points)."""
    t, m = g
    if t == NEVER_TIME or g == ZERO:
        return NEVER
    if t == FOREVER_TIME:
        return FOREVER
    if m > 0:
        return _mk(t, m - 1)
    return _mk(t - 1, M_MAX)


def tag_to_json(g: Tag) -> dict:
    return {"t": format_time(g.time) if g.time in (NEVER_TIME, FOREVER_TIME) else g.time,
            "m": g.microstep}


def tag_from_json(obj: dict) -> Tag:
    t = obj["t"]
    if t == "NEVER":
        t = NEVER_TIME
    elif t == "FOREVER":
        t = FOREVER_TIME
    elif not isinstance(t, int) or isinstance(t, bool):
        raise ValueError(f"bad time value: {t!r}")
    return Tag(t, obj["m"])


_UNITS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000}


def parse_duration(text: str) -> int:
    """Parse ``"20ms"``, ``"5s"``, ``"1500us"`` or a bare nanosecond count."""
    text = text.strip().lower()
    for unit in ("ns", "us", "ms", "s"):
        if text.endswith(unit):
            number = text[: -len(unit)]
            break
    else:
        unit, number = "ns", text
    value = int(number) * _UNITS[unit]
    if value < 0:
        raise ValueError(f"negative duration: {text}")
    return value


MS = 1_000_000
SEC = 1_000_000_000

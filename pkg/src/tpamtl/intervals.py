"""Actions, activities and Allen's interval relations.

Timestamps are integer ticks (milliseconds by convention).  Allen
relations hinge on exact endpoint equality, so floats are converted once at
ingestion with :func:`seconds_to_ticks` and never compared afterwards.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from typing import Iterable, Optional, Tuple

from .errors import EmptyActivity, InvalidInterval, ValidationError

__all__ = [
    "Action",
    "Activity",
    "AllenRelation",
    "allen_relation",
    "normalize_activity",
    "seconds_to_ticks",
]


class AllenRelation(enum.Enum):
    """The 13 qualitative relations between two proper intervals.

    ``allen_relation(a, b)`` reads as "a <relation> b".  The first seven
    members are the only ones that can occur between an earlier and a later
    action of a canonically ordered activity.
    """

    BEFORE = "before"
    MEETS = "meets"
    OVERLAPS = "overlaps"
    STARTS = "starts"
    CONTAINS = "contains"
    FINISHED_BY = "finished-by"
    EQUALS = "equals"
    DURING = "during"
    FINISHES = "finishes"
    STARTED_BY = "started-by"
    OVERLAPPED_BY = "overlapped-by"
    MET_BY = "met-by"
    AFTER = "after"

    @property
    def inverse(self) -> "AllenRelation":
        return _INVERSE[self]

    @property
    def rank(self) -> int:
        """Position in the fixed vocabulary; used for deterministic sorting."""
        return _RANK[self]

    @classmethod
    def from_name(cls, name: str) -> "AllenRelation":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown Allen relation {name!r}") from None

    def __str__(self):
        return self.value


_INVERSE = {
    AllenRelation.BEFORE: AllenRelation.AFTER,
    AllenRelation.MEETS: AllenRelation.MET_BY,
    AllenRelation.OVERLAPS: AllenRelation.OVERLAPPED_BY,
    AllenRelation.STARTS: AllenRelation.STARTED_BY,
    AllenRelation.DURING: AllenRelation.CONTAINS,
    AllenRelation.FINISHES: AllenRelation.FINISHED_BY,
    AllenRelation.EQUALS: AllenRelation.EQUALS,
}
_INVERSE.update({v: k for k, v in list(_INVERSE.items())})
_RANK = {r: i for i, r in enumerate(AllenRelation)}


@dataclass(frozen=True, order=True)
class Action:
    """A labelled proper interval ``[start, end)`` with ``start < end``.

    Field order makes the dataclass ordering coincide with the canonical
    activity order (start, end, action_id).
    """

    start: int
    end: int
    action_id: int

    def __post_init__(self):
        for name in ("start", "end", "action_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise InvalidInterval(f"{name} must be an integer, got {v!r}")
        if self.action_id < 0:
            raise InvalidInterval(f"action id must be non-negative, got {self.action_id}")
        if not self.start < self.end:
            raise InvalidInterval(
                f"action {self.action_id}: start {self.start} must be < end {self.end}"
            )

    @property
    def length(self) -> int:
        return self.end - self.start

    def shifted(self, offset: int) -> "Action":
        return Action(self.start + offset, self.end + offset, self.action_id)


def allen_relation(a: Action, b: Action) -> AllenRelation:
    """Return the Allen relation of interval `a` with respect to `b`."""
    if a.end < b.start:
        return AllenRelation.BEFORE
    if b.end < a.start:
        return AllenRelation.AFTER
    if a.end == b.start:
        return AllenRelation.MEETS
    if b.end == a.start:
        return AllenRelation.MET_BY
    # The intervals now share interior points.
    if a.start == b.start:
        if a.end == b.end:
            return AllenRelation.EQUALS
        return AllenRelation.STARTS if a.end < b.end else AllenRelation.STARTED_BY
    if a.end == b.end:
        return AllenRelation.FINISHES if a.start > b.start else AllenRelation.FINISHED_BY
    if a.start < b.start:
        return AllenRelation.OVERLAPS if a.end < b.end else AllenRelation.CONTAINS
    return AllenRelation.DURING if a.end < b.end else AllenRelation.OVERLAPPED_BY


@dataclass(frozen=True)
class Activity:
    """A canonically ordered, origin-shifted action sequence.

    Build instances with :func:`normalize_activity`; the constructor only
    checks the invariants.
    """

    actions: Tuple[Action, ...]
    label: Optional[int] = None
    activity_id: str = ""

    def __post_init__(self):
        if not self.actions:
            raise EmptyActivity(f"activity {self.activity_id!r} has no actions")
        acts = tuple(self.actions)
        object.__setattr__(self, "actions", acts)
        if any(acts[i] > acts[i + 1] for i in range(len(acts) - 1)):
            raise ValidationError("actions must be sorted by (start, end, action_id)")

    def __len__(self):
        return len(self.actions)

    @property
    def origin(self) -> int:
        return self.actions[0].start

    @property
    def end(self) -> int:
        return max(a.end for a in self.actions)

    @property
    def span(self) -> int:
        """Total time covered, ``max end - min start``."""
        return self.end - self.origin

    @property
    def action_ids(self) -> Tuple[int, ...]:
        return tuple(a.action_id for a in self.actions)


def normalize_activity(
    raw: Iterable, label: Optional[int] = None, activity_id: str = ""
) -> Activity:
    """Sort actions canonically and shift time so the earliest start is 0.

    `raw` may hold :class:`Action` objects or ``(start, action_id, end)``
    triples.
    """
    actions = []
    for item in raw:
        if not isinstance(item, Action):
            start, aid, end = item
            item = Action(start, end, aid)
        actions.append(item)
    if not actions:
        raise EmptyActivity(f"activity {activity_id!r} has no actions")
    actions.sort()
    offset = -actions[0].start
    if offset:
        actions = [a.shifted(offset) for a in actions]
    return Activity(tuple(actions), label=label, activity_id=activity_id)


def seconds_to_ticks(value) -> int:
    """Convert decimal seconds (str, int or Decimal) to integer milliseconds.

    Rounds half to even.  Floats are accepted but go through ``repr`` so the
    rounding applies to the shortest decimal representation.

    >>> seconds_to_ticks("1.0005")
    1000
    >>> seconds_to_ticks("1.0015")
    1002
    """
    try:
        d = Decimal(repr(value) if isinstance(value, float) else str(value))
    except InvalidOperation:
        raise ValidationError(f"not a decimal number of seconds: {value!r}") from None
    if not d.is_finite():
        raise ValidationError(f"not a finite number of seconds: {value!r}")
    return int((d * 1000).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))

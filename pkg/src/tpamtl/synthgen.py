"""Synthetic activities with planted temporal patterns.

Randomness comes from :class:`XorShift64Star`, fully specified below, so a
corpus is reproducible from its seed on any platform and in any language:

* seeding: ``state = splitmix64(seed)``, replaced by ``1`` if it is zero,
  where ``splitmix64(z)`` is ``z += 0x9E3779B97F4A7C15;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) *
  0x94D049BB133111EB; return z ^ (z >> 31)`` (all arithmetic mod 2**64);
* step: ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``, output
  ``x * 0x2545F4914F6CDD1D mod 2**64``;
* ``randint(lo, hi)`` (inclusive) rejects outputs at or above the largest
  multiple of ``hi - lo + 1`` below 2**64 and returns ``lo + out % (hi - lo + 1)``;
* ``random()`` is ``(out >> 11) * 2**-53``.

Each planted pattern is realized by solving a simple temporal problem: the
Allen relations and the duration ranges become difference constraints on
the endpoints, tightened to their minimal network with Floyd-Warshall.
Endpoints are then drawn one at a time uniformly from the interval left
open by the ones already drawn; the minimal network guarantees the draw
can always be completed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import UnrealizableTemplate, ValidationError
from .intervals import Action, Activity, AllenRelation, allen_relation, normalize_activity
from .patterns import TemporalPattern, pattern_of

__all__ = [
    "XorShift64Star",
    "ClassTemplate",
    "generate",
    "realize",
    "canonical_form",
    "benchmark_templates",
    "related_templates",
    "separable_templates",
]

_MASK = (1 << 64) - 1
INF = float("inf")


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* generator (Vigna, 2016) seeded through splitmix64."""

    def __init__(self, seed: int):
        self.state = splitmix64(int(seed) & _MASK) or 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK

    def randint(self, lo: int, hi: int) -> int:
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % span

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class ClassTemplate:
    """How to draw one activity of a class.

    ``durations`` maps each action id to an inclusive ``(lo, hi)`` length
    range in ticks.  Distractors are drawn from ``distractor_ids`` (every id
    in ``durations`` by default); each planted action brings one with
    probability ``noise_rate``.  ``max_gap`` bounds the idle time between
    consecutive planted patterns and the gaps inside ``before`` relations.
    """

    class_index: int
    planted_patterns: Tuple[TemporalPattern, ...]
    durations: Dict[int, Tuple[int, int]]
    noise_rate: float = 0.0
    distractor_ids: Optional[Tuple[int, ...]] = None
    max_gap: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "planted_patterns", tuple(self.planted_patterns))
        if not 0 <= self.noise_rate < 1:
            raise ValidationError("noise_rate must lie in [0, 1)")
        for aid, (lo, hi) in self.durations.items():
            if not 1 <= lo <= hi:
                raise ValidationError(f"bad duration range {(lo, hi)} for action {aid}")
        for p in self.planted_patterns:
            for aid in p.action_ids:
                if aid not in self.durations:
                    raise ValidationError(f"no duration range for action {aid}")

    @property
    def label_name(self) -> str:
        return self.name if self.name is not None else f"class{self.class_index}"

    def gap_bound(self) -> int:
        if self.max_gap is not None:
            return self.max_gap
        return max(hi for _, hi in self.durations.values())


# endpoint constraints x_b - x_a >= c (strict orderings use c = 1) and x_a == x_b
_STRICT = "lt"
_EQUAL = "eq"


def _relation_constraints(rel: AllenRelation, si, ei, sj, ej):
    """Ordering constraints among endpoints implied by ``i rel j``."""
    R = AllenRelation
    table = {
        R.BEFORE: [(_STRICT, ei, sj)],
        R.MEETS: [(_EQUAL, ei, sj)],
        R.OVERLAPS: [(_STRICT, si, sj), (_STRICT, sj, ei), (_STRICT, ei, ej)],
        R.STARTS: [(_EQUAL, si, sj), (_STRICT, ei, ej)],
        R.DURING: [(_STRICT, sj, si), (_STRICT, ei, ej)],
        R.FINISHES: [(_STRICT, sj, si), (_EQUAL, ei, ej)],
        R.EQUALS: [(_EQUAL, si, sj), (_EQUAL, ei, ej)],
    }
    if rel in table:
        return table[rel]
    # inverse relations: swap the roles of i and j
    return _relation_constraints(rel.inverse, sj, ej, si, ei)


def _minimal_network(p: TemporalPattern, durations, gap):
    k = p.dim
    n = 2 * k + 1  # variable 0 is the origin
    horizon = sum(durations[a][1] for a in p.action_ids) + k * gap
    d = [[INF] * n for _ in range(n)]
    for v in range(n):
        d[v][v] = 0

    def upper(u, v, c):  # x_v - x_u <= c
        if c < d[u][v]:
            d[u][v] = c

    for v in range(1, n):
        upper(0, v, horizon)
        upper(v, 0, 0)
    for i, aid in enumerate(p.action_ids):
        s, e = 2 * i + 1, 2 * i + 2
        lo, hi = durations[aid]
        upper(s, e, hi)
        upper(e, s, -lo)
    for i in range(k):
        for j in range(i + 1, k):
            for kind, a, b in _relation_constraints(p.relation(i, j), 2 * i + 1, 2 * i + 2, 2 * j + 1, 2 * j + 2):
                if kind == _EQUAL:
                    upper(a, b, 0)
                    upper(b, a, 0)
                else:
                    upper(b, a, -1)
                    # a "before" gap may not exceed the template's gap bound
                    if p.relation(i, j) in (AllenRelation.BEFORE, AllenRelation.AFTER):
                        upper(a, b, gap)
    for m in range(n):
        dm = d[m]
        for u in range(n):
            du = d[u]
            dum = du[m]
            if dum == INF:
                continue
            for v in range(n):
                c = dum + dm[v]
                if c < du[v]:
                    du[v] = c
    if any(d[v][v] < 0 for v in range(n)):
        raise UnrealizableTemplate(f"pattern {p} admits no integer realization within the duration ranges")
    return d


def realize(p: TemporalPattern, durations, rng: XorShift64Star, gap: Optional[int] = None) -> List[Action]:
    """Random actions (origin 0) whose pairwise relations are exactly those of `p`."""
    if gap is None:
        gap = max(durations[a][1] for a in p.action_ids)
    d = _minimal_network(p, durations, max(gap, 1))
    n = len(d)
    x = [0] + [None] * (n - 1)
    for v in range(1, n):
        lo = max(x[u] - d[v][u] for u in range(v))
        hi = min(x[u] + d[u][v] for u in range(v))
        x[v] = rng.randint(int(lo), int(hi))
    actions = [Action(x[2 * i + 1], x[2 * i + 2], aid) for i, aid in enumerate(p.action_ids)]
    for i in range(p.dim):
        for j in range(i + 1, p.dim):
            assert allen_relation(actions[i], actions[j]) is p.relation(i, j)
    return actions


def canonical_form(p: TemporalPattern, durations=None) -> TemporalPattern:
    """The pattern as it appears in canonically ordered activities.

    Element order in a user-written pattern may differ from the (start, end,
    id) order of its realizations, e.g. ``(B after A)``.
    """
    if durations is None:
        durations = {a: (1, 4 * p.dim) for a in p.action_ids}
    acts = sorted(realize(p, durations, XorShift64Star(0)))
    return pattern_of(acts)


def _draw(template: ClassTemplate, rng: XorShift64Star, label: int, activity_id: str) -> Activity:
    gap = template.gap_bound()
    actions: List[Action] = []
    cursor = 0
    for p in template.planted_patterns:
        offset = cursor + rng.randint(0, gap)
        placed = [a.shifted(offset) for a in realize(p, template.durations, rng, gap)]
        actions.extend(placed)
        cursor = max(a.end for a in placed)
    pool = template.distractor_ids or tuple(sorted(template.durations))
    n_planted = len(actions)
    for _ in range(n_planted):
        if rng.random() < template.noise_rate:
            aid = rng.choice(pool)
            lo, hi = template.durations[aid]
            length = rng.randint(lo, hi)
            start = rng.randint(0, max(cursor, 1))
            actions.append(Action(start, start + length, aid))
    return normalize_activity(actions, label=label, activity_id=activity_id)


def generate(templates: Sequence[ClassTemplate], n_per_class: int, seed: int) -> List[Activity]:
    """`n_per_class` activities per template, class by class, from one seed.

    Activity labels are the templates' ``class_index`` values and ids are
    ``"c<class>_<n>"``.
    """
    if n_per_class < 1:
        raise ValidationError("n_per_class must be >= 1")
    for t in templates:
        if not t.planted_patterns:
            raise ValidationError(f"template {t.class_index} plants no pattern")
        for p in t.planted_patterns:
            _minimal_network(p, t.durations, max(t.gap_bound(), 1))
    rng = XorShift64Star(seed)
    out = []
    for t in templates:
        for n in range(n_per_class):
            out.append(_draw(t, rng, t.class_index, f"c{t.class_index}_{n}"))
    return out


# ---------------------------------------------------------------------------
# presets

R = AllenRelation


def _pat(*spec):
    """``_pat(0)`` or ``_pat(0, "overlaps", 1)``."""
    if len(spec) == 1:
        return TemporalPattern((spec[0],))
    a, rel, b = spec
    return TemporalPattern((a, b), (AllenRelation(rel),))


def _durations(ids, lo=200, hi=1000):
    return {i: (lo, hi) for i in ids}


def separable_templates(n_classes: int = 2) -> List[ClassTemplate]:
    """Noise-free classes with disjoint planted 2-patterns."""
    ids = range(2 * n_classes)
    return [
        ClassTemplate(c, (_pat(2 * c, "overlaps", 2 * c + 1),), _durations(ids))
        for c in range(n_classes)
    ]


def benchmark_templates(noise_rate: float = 0.3) -> List[ClassTemplate]:
    """Four classes over a shared alphabet, told apart mostly by relations.

    Ids 0-3 occur in every class; 4 and 5 only as distractors.
    """
    layouts = [
        (_pat(0, "overlaps", 1), _pat(2, "meets", 3)),
        (_pat(0, "before", 1), _pat(2, "contains", 3)),
        (_pat(1, "overlaps", 0), _pat(2, "starts", 3)),
        (_pat(0, "contains", 1), _pat(2, "before", 3)),
    ]
    dur = _durations(range(6))
    return [ClassTemplate(c, lay, dur, noise_rate) for c, lay in enumerate(layouts)]


def related_templates(noise_rate: float = 0.2) -> List[ClassTemplate]:
    """Classes 0 and 1 share a planted pattern; class 2 shares nothing."""
    shared = _pat(0, "overlaps", 1)
    layouts = [
        (shared, _pat(2, "before", 3)),
        (shared, _pat(4, "contains", 5)),
        (_pat(6, "meets", 7), _pat(8, "starts", 9)),
    ]
    dur = _durations(range(10))
    return [ClassTemplate(c, lay, dur, noise_rate) for c, lay in enumerate(layouts)]

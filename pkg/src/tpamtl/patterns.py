"""Frequent temporal pattern mining with sliding-window support.

A temporal pattern is a list of action ids plus the Allen relation of every
ordered pair, written in the canonical order of any activity that contains
it.  Pairwise relations together with the ids fix that order, so the pair
``(action_ids, relations)`` identifies a pattern uniquely.

Support follows Höppner's sliding-window definition.  A window
``[t, t + w]`` sees an instance when it intersects every interval of the
instance, which happens for ``t`` in ``(max start - w, min end)``.  The
support of a pattern in an activity is the measure of the union of these
positions over all instances, divided by ``w + span``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EmptyTrainingSet, ParseError, ValidationError
from .intervals import Action, Activity, AllenRelation, allen_relation

__all__ = [
    "TemporalPattern",
    "PatternInstance",
    "MiningConfig",
    "FeatureSpace",
    "pattern_of",
    "pattern_support",
    "find_instances",
    "is_subpattern",
    "resolve_window",
    "mine",
    "featurize",
    "featurize_many",
    "write_patterns",
    "read_patterns",
    "format_patterns",
    "parse_patterns",
]

AGGREGATIONS = ("max", "mean")
WINDOW_MODES = ("avg2", "avg", "max")


@dataclass(frozen=True)
class TemporalPattern:
    """Action ids and the row-major upper-triangular relation vector.

    For ``k`` ids, ``relations`` lists ``rel(0,1), rel(0,2), ..., rel(0,k-1),
    rel(1,2), ...``, each read as "earlier <rel> later".
    """

    action_ids: Tuple[int, ...]
    relations: Tuple[AllenRelation, ...] = ()

    def __post_init__(self):
        ids = tuple(int(i) for i in self.action_ids)
        rels = tuple(self.relations)
        object.__setattr__(self, "action_ids", ids)
        object.__setattr__(self, "relations", rels)
        k = len(ids)
        if k < 1:
            raise ValidationError("a pattern needs at least one action")
        if len(rels) != k * (k - 1) // 2:
            raise ValidationError(
                f"a {k}-pattern needs {k * (k - 1) // 2} relations, got {len(rels)}"
            )

    @property
    def dim(self) -> int:
        return len(self.action_ids)

    def relation(self, i: int, j: int) -> AllenRelation:
        """Relation of element `i` to element `j` (any order, ``i != j``)."""
        if i == j:
            return AllenRelation.EQUALS
        if i > j:
            return self.relation(j, i).inverse
        k = self.dim
        return self.relations[i * k - i * (i + 1) // 2 + (j - i - 1)]

    def sub(self, keep: Sequence[int]) -> "TemporalPattern":
        """The pattern restricted to the (increasing) element positions `keep`."""
        ids = tuple(self.action_ids[i] for i in keep)
        rels = tuple(self.relation(a, b) for a, b in itertools.combinations(keep, 2))
        return TemporalPattern(ids, rels)

    def sort_key(self):
        return (self.dim, self.action_ids, tuple(r.rank for r in self.relations))

    def __str__(self):
        if self.dim == 1:
            return "{%d}" % self.action_ids[0]
        pairs = [
            f"{self.action_ids[i]} {self.relation(i, j)} {self.action_ids[j]}"
            for i, j in itertools.combinations(range(self.dim), 2)
        ]
        return "(" + "; ".join(pairs) + ")"


@dataclass(frozen=True)
class PatternInstance:
    pattern: TemporalPattern
    action_indices: Tuple[int, ...]


def pattern_of(actions: Sequence[Action]) -> TemporalPattern:
    """The pattern realized by `actions`, given in canonical order."""
    ids = tuple(a.action_id for a in actions)
    rels = tuple(allen_relation(a, b) for a, b in itertools.combinations(actions, 2))
    return TemporalPattern(ids, rels)


def _pattern_key(actions: Sequence[Action], idx: Sequence[int]):
    sel = [actions[i] for i in idx]
    return (
        tuple(a.action_id for a in sel),
        tuple(allen_relation(a, b) for a, b in itertools.combinations(sel, 2)),
    )


# ---------------------------------------------------------------------------
# support


def _visible_span(actions: Sequence[Action], idx: Sequence[int], window: int):
    lo = max(actions[i].start for i in idx) - window
    hi = min(actions[i].end for i in idx)
    return (lo, hi) if hi > lo else None


def _union_length(spans: Iterable[Tuple[int, int]]) -> int:
    total = 0
    cur_lo = cur_hi = None
    for lo, hi in sorted(spans):
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        elif hi > cur_hi:
            cur_hi = hi
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def _support_from_instances(act: Activity, instances, window: int) -> float:
    acts = act.actions
    spans = [s for s in (_visible_span(acts, idx, window) for idx in instances) if s]
    if not spans:
        return 0.0
    lo_bound, hi_bound = act.origin - window, act.end
    clipped = [(max(lo, lo_bound), min(hi, hi_bound)) for lo, hi in spans]
    return _union_length(s for s in clipped if s[1] > s[0]) / (window + act.span)


def pattern_support(p: TemporalPattern, act: Activity, window: int) -> float:
    """Fraction of sliding-window positions at which `p` is observable in `act`."""
    _check_window(window)
    idx = [inst.action_indices for inst in find_instances(p, act)]
    return _support_from_instances(act, idx, window)


def _check_window(window):
    if isinstance(window, bool) or not isinstance(window, (int, np.integer)) or window <= 0:
        raise ValidationError(f"window must be a positive integer number of ticks, got {window!r}")


# ---------------------------------------------------------------------------
# instances and the subpattern order


def find_instances(p: TemporalPattern, act: Activity) -> List[PatternInstance]:
    """All increasing index tuples of `act` that realize `p`."""
    acts = act.actions
    n, k = len(acts), p.dim
    out = []
    chosen: List[int] = []

    def extend(pos, start):
        if pos == k:
            out.append(PatternInstance(p, tuple(chosen)))
            return
        want = p.action_ids[pos]
        for j in range(start, n - (k - pos - 1)):
            if acts[j].action_id != want:
                continue
            b = acts[j]
            if all(allen_relation(acts[c], b) is p.relation(q, pos) for q, c in enumerate(chosen)):
                chosen.append(j)
                extend(pos + 1, j + 1)
                chosen.pop()

    extend(0, 0)
    return out


def is_subpattern(q: TemporalPattern, p: TemporalPattern) -> bool:
    """True iff ``q`` embeds into ``p`` and has strictly smaller dimension."""
    if q.dim >= p.dim:
        return False
    for image in itertools.permutations(range(p.dim), q.dim):
        if any(q.action_ids[i] != p.action_ids[image[i]] for i in range(q.dim)):
            continue
        if all(
            q.relation(i, j) is p.relation(image[i], image[j])
            for i, j in itertools.combinations(range(q.dim), 2)
        ):
            return True
    return False


# ---------------------------------------------------------------------------
# mining


@dataclass(frozen=True)
class MiningConfig:
    """Mining parameters.

    ``window`` is a fixed width in ticks; when it is ``None`` the width is
    derived from the training activities according to ``window_mode``:
    ``"avg2"`` (twice the mean action length), ``"avg"`` or ``"max"``.
    ``aggregation`` decides how per-activity supports are combined into one
    frequency score across the corpus.
    """

    minsup: float = 0.01
    window: Optional[int] = None
    max_dim: int = 3
    aggregation: str = "max"
    window_mode: str = "avg2"

    def __post_init__(self):
        if not (0 < self.minsup <= 1):
            raise ValidationError(f"minsup must lie in (0, 1], got {self.minsup}")
        if self.window is not None:
            _check_window(self.window)
        if isinstance(self.max_dim, bool) or not isinstance(self.max_dim, int) or self.max_dim < 1:
            raise ValidationError(f"max_dim must be an integer >= 1, got {self.max_dim!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValidationError(f"aggregation must be one of {AGGREGATIONS}")
        if self.window_mode not in WINDOW_MODES:
            raise ValidationError(f"window_mode must be one of {WINDOW_MODES}")


def resolve_window(cfg: MiningConfig, activities: Sequence[Activity]) -> int:
    """Window width in ticks, rounding derived widths half to even (minimum 1)."""
    if cfg.window is not None:
        return int(cfg.window)
    lengths = [a.length for act in activities for a in act.actions]
    if not lengths:
        raise EmptyTrainingSet("cannot derive a window from an empty training set")
    if cfg.window_mode == "max":
        return max(lengths)
    mean = Fraction(sum(lengths), len(lengths))
    if cfg.window_mode == "avg2":
        mean *= 2
    return max(1, round(mean))


@dataclass(frozen=True)
class FeatureSpace:
    """Ordered frequent patterns; column ``j`` of a feature vector is ``patterns[j]``."""

    patterns: Tuple[TemporalPattern, ...]
    window: int
    minsup: float = 0.0
    index: Mapping[TemporalPattern, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pats = tuple(self.patterns)
        object.__setattr__(self, "patterns", pats)
        index = {p: j for j, p in enumerate(pats)}
        if len(index) != len(pats):
            raise ValidationError("feature space patterns must be unique")
        object.__setattr__(self, "index", index)
        _check_window(self.window)

    def __len__(self):
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    @property
    def max_dim(self) -> int:
        return max((p.dim for p in self.patterns), default=0)

    def counts_by_dim(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for p in self.patterns:
            out[p.dim] = out.get(p.dim, 0) + 1
        return out


# pattern -> {activity position -> list of index tuples}
_Occurrences = Dict[TemporalPattern, Dict[int, List[Tuple[int, ...]]]]


def _frequent(occ: _Occurrences, activities, window, cfg) -> _Occurrences:
    n = len(activities)
    keep = {}
    for pat, per_act in occ.items():
        sups = [_support_from_instances(activities[a], inst, window) for a, inst in per_act.items()]
        if cfg.aggregation == "max":
            score = max(sups, default=0.0)
        else:
            score = math.fsum(sups) / n
        if score >= cfg.minsup:
            keep[pat] = per_act
    return keep


def mine(training: Sequence[Activity], cfg: MiningConfig = MiningConfig()) -> FeatureSpace:
    """Level-wise frequent pattern mining over `training`.

    Candidates of size k+1 grow from the observed instances of frequent
    k-patterns by appending one later action, then survive only if every
    k-subpattern is frequent.  Appending at the end suffices: the prefix of
    any instance of a frequent (k+1)-pattern is an instance of a frequent
    k-pattern by monotonicity.
    """
    training = list(training)
    if not training:
        raise EmptyTrainingSet("mining needs at least one training activity")
    window = resolve_window(cfg, training)

    occ: _Occurrences = {}
    for a, act in enumerate(training):
        for i, action in enumerate(act.actions):
            p = TemporalPattern((action.action_id,))
            occ.setdefault(p, {}).setdefault(a, []).append((i,))
    level = _frequent(occ, training, window, cfg)
    frequent_ids = {p.action_ids[0] for p in level}
    found = list(level)

    k = 1
    while level and k < cfg.max_dim:
        known = set(level)
        candidates: _Occurrences = {}
        rejected = set()
        for pat, per_act in level.items():
            for a, instances in per_act.items():
                acts = training[a].actions
                for inst in instances:
                    for j in range(inst[-1] + 1, len(acts)):
                        if acts[j].action_id not in frequent_ids:
                            continue
                        ext = inst + (j,)
                        cand = TemporalPattern(*_pattern_key(acts, ext))
                        if cand in rejected:
                            continue
                        if cand not in candidates:
                            if not all(
                                cand.sub(keep) in known
                                for keep in itertools.combinations(range(k + 1), k)
                            ):
                                rejected.add(cand)
                                continue
                            candidates[cand] = {}
                        candidates[cand].setdefault(a, []).append(ext)
        level = _frequent(candidates, training, window, cfg)
        found.extend(level)
        k += 1

    found.sort(key=TemporalPattern.sort_key)
    return FeatureSpace(tuple(found), window, cfg.minsup)


# ---------------------------------------------------------------------------
# featurization


def featurize(act: Activity, fs: FeatureSpace, window: Optional[int] = None) -> np.ndarray:
    """Support of every feature-space pattern in `act`, as a length-D vector.

    Instances are enumerated once per activity (all increasing index tuples
    up to the largest pattern size) and routed to their columns.
    """
    window = fs.window if window is None else window
    _check_window(window)
    out = np.zeros(len(fs))
    if not len(fs):
        return out
    acts = act.actions
    index = fs.index
    spans: Dict[int, List[Tuple[int, int]]] = {}
    for k in range(1, min(fs.max_dim, len(acts)) + 1):
        for idx in itertools.combinations(range(len(acts)), k):
            col = index.get(TemporalPattern(*_pattern_key(acts, idx)))
            if col is None:
                continue
            span = _visible_span(acts, idx, window)
            if span is not None:
                spans.setdefault(col, []).append(span)
    lo_bound, hi_bound = act.origin - window, act.end
    for col, ss in spans.items():
        clipped = [(max(lo, lo_bound), min(hi, hi_bound)) for lo, hi in ss]
        out[col] = _union_length(s for s in clipped if s[1] > s[0]) / (window + act.span)
    return out


def featurize_many(
    activities: Sequence[Activity], fs: FeatureSpace, window: Optional[int] = None
) -> np.ndarray:
    """Stack feature vectors row-wise into an N x D matrix."""
    X = np.zeros((len(activities), len(fs)))
    for n, act in enumerate(activities):
        X[n] = featurize(act, fs, window)
    return X


# ---------------------------------------------------------------------------
# pattern-set text format
#
#   #patterns<TAB>window=<ticks><TAB>minsup=<float>
#   <dim><TAB><id1,id2,...><TAB><rel(1,2),rel(1,3),...>


def format_patterns(fs: FeatureSpace) -> str:
    lines = [f"#patterns\twindow={fs.window}\tminsup={fs.minsup!r}"]
    for p in fs.patterns:
        ids = ",".join(str(i) for i in p.action_ids)
        rels = ",".join(r.value for r in p.relations)
        lines.append(f"{p.dim}\t{ids}\t{rels}")
    return "\n".join(lines) + "\n"


def parse_patterns(lines: Union[str, Iterable[str]], path=None) -> FeatureSpace:
    if isinstance(lines, str):
        lines = lines.splitlines()
    it = iter(enumerate(lines, 1))
    header = None
    for lineno, line in it:
        line = line.rstrip("\r\n")
        if line.strip():
            header = (lineno, line)
            break
    if header is None:
        raise ParseError("empty pattern file", path=path)
    lineno, line = header
    fields = line.split("\t")
    if fields[0] != "#patterns":
        raise ParseError("missing '#patterns' header", lineno, path)
    meta = {}
    for f in fields[1:]:
        key, sep, value = f.partition("=")
        if not sep:
            raise ParseError(f"malformed header field {f!r}", lineno, path)
        meta[key] = value
    try:
        window = int(meta["window"])
        minsup = float(meta.get("minsup", "0"))
    except (KeyError, ValueError):
        raise ParseError("header must record window=<ticks> and minsup=<float>", lineno, path) from None

    patterns = []
    for lineno, line in it:
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 2:
            parts.append("")
        if len(parts) != 3:
            raise ParseError("expected dim<TAB>ids<TAB>relations", lineno, path)
        try:
            dim = int(parts[0])
            ids = tuple(int(x) for x in parts[1].split(","))
            rels = tuple(AllenRelation.from_name(r) for r in parts[2].split(",") if r)
            p = TemporalPattern(ids, rels)
        except (ValueError, ValidationError) as exc:
            raise ParseError(str(exc), lineno, path) from None
        if p.dim != dim:
            raise ParseError(f"dim {dim} does not match {p.dim} action ids", lineno, path)
        patterns.append(p)
    try:
        return FeatureSpace(tuple(patterns), window, minsup)
    except ValidationError as exc:
        raise ParseError(str(exc), path=path) from None


def write_patterns(fs: FeatureSpace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_patterns(fs))


def read_patterns(path) -> FeatureSpace:
    with open(path, encoding="utf-8") as fh:
        return parse_patterns(fh.read(), path=path)

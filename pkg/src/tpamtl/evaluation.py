"""Cross-validation, significance testing and relatedness reporting."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import betainc

from .errors import LengthMismatch, NoOmega, TooFewSamples, ValidationError
from .intervals import Activity
from .model import ModelMode, TrainedModel, predict_many, train
from .optimizer import Hyperparams, SolverConfig
from .patterns import MiningConfig
from .synthgen import XorShift64Star

__all__ = [
    "CVResult",
    "RelatednessReport",
    "stratified_folds",
    "kfold_cv",
    "resubstitution_accuracy",
    "paired_t_test",
    "relatedness_report",
]


@dataclass
class CVResult:
    mode: str
    fold_accuracies: List[float]
    confusion: np.ndarray
    folds: List[int]
    seed: int
    fold_sizes: List[int] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_accuracies, ddof=1)) if len(self.fold_accuracies) > 1 else 0.0

    def records(self) -> List[dict]:
        """One JSON-ready dict per fold followed by a summary record."""
        out = [
            {"type": "fold", "mode": self.mode, "fold": i, "n_test": n, "accuracy": acc}
            for i, (acc, n) in enumerate(zip(self.fold_accuracies, self.fold_sizes))
        ]
        out.append(
            {
                "type": "summary",
                "mode": self.mode,
                "k": len(self.fold_accuracies),
                "seed": self.seed,
                "mean_accuracy": self.mean,
                "std_accuracy": self.std,
                "confusion": self.confusion.tolist(),
            }
        )
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> List[int]:
    """Fold index for every sample.

    Each class is shuffled with the package PRNG and dealt round-robin; the
    deal continues across classes so fold sizes differ by at most one.
    """
    if k < 2:
        raise ValidationError("k must be >= 2")
    labels = [int(y) for y in labels]
    counts = {}
    for y in labels:
        counts[y] = counts.get(y, 0) + 1
    short = {c: n for c, n in counts.items() if n < k}
    if short:
        detail = ", ".join(f"class {c}: {n}" for c, n in sorted(short.items()))
        raise TooFewSamples(f"{k}-fold stratification needs >= {k} samples per class ({detail})")
    rng = XorShift64Star(seed)
    folds = [0] * len(labels)
    nxt = 0
    for c in sorted(counts):
        members = [i for i, y in enumerate(labels) if y == c]
        rng.shuffle(members)
        for i in members:
            folds[i] = nxt
            nxt = (nxt + 1) % k
    return folds


def _run_fold(args):
    train_acts, test_acts, mining_cfg, hp, mode, solver_cfg, label_names, standardize = args
    model = train(
        train_acts, mining_cfg, hp, mode, solver_cfg, label_names=label_names, standardize=standardize
    )
    return predict_many(model, test_acts)


def kfold_cv(
    activities: Sequence[Activity],
    k: int = 10,
    mining_cfg: MiningConfig = MiningConfig(),
    hp: Hyperparams = Hyperparams(),
    mode=ModelMode.AMTL,
    seed: int = 0,
    solver_cfg: SolverConfig = SolverConfig(),
    *,
    label_names: Optional[Sequence[str]] = None,
    standardize: bool = False,
    jobs: int = 1,
) -> CVResult:
    """Stratified k-fold accuracy; patterns are mined inside each training fold."""
    activities = list(activities)
    mode = ModelMode.parse(mode)
    labels = [a.label for a in activities]
    if any(y is None for y in labels):
        raise ValidationError("cross-validation needs labeled activities")
    if label_names is None:
        label_names = [str(i) for i in range(max(labels) + 1)]
    M = len(label_names)
    folds = stratified_folds(labels, k, seed)
    tasks = []
    for f in range(k):
        tr = [a for a, g in zip(activities, folds) if g != f]
        te = [a for a, g in zip(activities, folds) if g == f]
        tasks.append((tr, te, mining_cfg, hp, mode, solver_cfg, list(label_names), standardize))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            preds = list(pool.map(_run_fold, tasks))
    else:
        preds = [_run_fold(t) for t in tasks]

    confusion = np.zeros((M, M), dtype=int)
    accs, sizes = [], []
    for (_, te, *_rest), pred in zip(tasks, preds):
        truth = np.array([a.label for a in te])
        for t, p in zip(truth, pred):
            confusion[t, p] += 1
        accs.append(float(np.mean(pred == truth)))
        sizes.append(len(te))
    return CVResult(mode.value, accs, confusion, folds, seed, sizes)


def resubstitution_accuracy(model: TrainedModel, activities: Sequence[Activity]) -> float:
    truth = np.array([a.label for a in activities])
    return float(np.mean(predict_many(model, activities) == truth))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided paired t-test p-value on per-fold differences.

    No difference at all gives 1.0; a constant nonzero difference (infinite
    t) gives 0.0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"paired samples differ in length: {a.size} vs {b.size}")
    k = a.size
    if k < 2:
        raise LengthMismatch("a paired t-test needs at least two pairs")
    d = a - b
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / math.sqrt(k))
    df = k - 1
    # P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)
    p = float(betainc(0.5 * df, 0.5, df / (df + t * t)))
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class RelatednessReport:
    labels: List[str]
    matrix: np.ndarray  # Omega with NaN on the diagonal

    def largest_pair(self):
        """Row/column of the largest off-diagonal entry (first in row-major order)."""
        m = np.where(np.isnan(self.matrix), -np.inf, self.matrix)
        i, j = np.unravel_index(int(np.argmax(m)), m.shape)
        return int(i), int(j)

    def format(self, digits: int = 3) -> str:
        width = max(max((len(s) for s in self.labels), default=1), digits + 3)
        head = " " * width + " " + " ".join(s.rjust(width) for s in self.labels)
        rows = [head]
        for name, row in zip(self.labels, self.matrix):
            cells = ["-".rjust(width) if np.isnan(v) else f"{v:.{digits}f}".rjust(width) for v in row]
            rows.append(name.rjust(width) + " " + " ".join(cells))
        return "\n".join(rows)


def relatedness_report(model: TrainedModel) -> RelatednessReport:
    if model.omega is None:
        raise NoOmega(f"mode {model.mode.value!r} does not learn task relatedness")
    m = np.array(model.omega, dtype=float)
    np.fill_diagonal(m, np.nan)
    return RelatednessReport(list(model.label_names), m)

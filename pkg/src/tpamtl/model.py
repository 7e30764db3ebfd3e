"""Training and prediction on top of pattern features.

Four modes share one code path:

``amtl``
    the full objective, alternating W and Omega;
``mtl``
    the same with ``theta = 0``;
``gl``
    group Lasso, the relatedness term dropped (``lam = 0``) and Omega unused;
``lasso``
    ridge plus element-wise l1 (``gamma`` and ``theta`` play the roles of the
    ridge and l1 weights).
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyFeatureSpace, EmptyTrainingSet, ParseError, SingleClass, ValidationError
from .intervals import Activity
from .optimizer import Hyperparams, SolverConfig, fit_alternating, objective, one_hot, solve_w
from .patterns import FeatureSpace, MiningConfig, featurize, featurize_many, format_patterns, mine, parse_patterns

__all__ = ["ModelMode", "TrainedModel", "train", "predict", "predict_many", "save_model", "load_model"]

MAGIC = "#tpamtl-model\t1"


class ModelMode(enum.Enum):
    AMTL = "amtl"
    MTL = "mtl"
    GL = "gl"
    LASSO = "lasso"

    @classmethod
    def parse(cls, value) -> "ModelMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValidationError(f"unknown mode {value!r}; expected one of {names}") from None

    @property
    def uses_omega(self) -> bool:
        return self in (ModelMode.AMTL, ModelMode.MTL)

    def effective(self, hp: Hyperparams) -> Hyperparams:
        """Hyperparameters with the terms this mode switches off set to zero."""
        if self is ModelMode.MTL:
            return replace(hp, theta=0.0)
        if self in (ModelMode.GL, ModelMode.LASSO):
            return replace(hp, lam=0.0)
        return hp

    @property
    def penalty(self) -> str:
        return "l1" if self is ModelMode.LASSO else "l21"


@dataclass
class TrainedModel:
    feature_space: FeatureSpace
    W: np.ndarray
    label_names: List[str]
    mode: ModelMode
    hyperparams: Hyperparams
    omega: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        D, M = self.W.shape
        if D != len(self.feature_space):
            raise ValidationError(f"W has {D} rows but the feature space has {len(self.feature_space)} patterns")
        if M != len(self.label_names):
            raise ValidationError(f"W has {M} columns but there are {len(self.label_names)} labels")

    @property
    def window(self) -> int:
        return self.feature_space.window

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.center is None:
            return X
        return (X - self.center) / self.scale

    def features(self, activities: Sequence[Activity]) -> np.ndarray:
        return self.transform(featurize_many(activities, self.feature_space))


def _labels_of(activities: Sequence[Activity]) -> np.ndarray:
    missing = [a.activity_id for a in activities if a.label is None]
    if missing:
        raise ValidationError(f"unlabeled training activities: {', '.join(map(str, missing[:5]))}")
    return np.array([a.label for a in activities], dtype=int)


def train(
    activities: Sequence[Activity],
    mining_cfg: MiningConfig = MiningConfig(),
    hp: Hyperparams = Hyperparams(),
    mode=ModelMode.AMTL,
    solver_cfg: SolverConfig = SolverConfig(),
    *,
    label_names: Optional[Sequence[str]] = None,
    standardize: bool = False,
    feature_space: Optional[FeatureSpace] = None,
    keep_fista_log: bool = False,
) -> TrainedModel:
    """Mine patterns from `activities`, featurize them and fit W.

    `label_names` fixes the number of classes M; by default it is one more
    than the largest label index.  A precomputed `feature_space` skips
    mining (it must come from these training activities to avoid leakage).
    """
    activities = list(activities)
    if not activities:
        raise EmptyTrainingSet("no training activities")
    mode = ModelMode.parse(mode)
    labels = _labels_of(activities)
    if label_names is None:
        label_names = [str(i) for i in range(int(labels.max()) + 1)]
    label_names = [str(n) for n in label_names]
    if len(set(labels.tolist())) < 2:
        raise SingleClass("training data must contain at least two classes")
    if labels.max() >= len(label_names):
        raise ValidationError("label index exceeds the number of label names")

    fs = mine(activities, mining_cfg) if feature_space is None else feature_space
    if not len(fs):
        raise EmptyFeatureSpace("no frequent pattern at this minsup; lower minsup or widen the window")
    X = featurize_many(activities, fs)
    center = scale = None
    if standardize:
        center = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        X = (X - center) / scale
    Y = one_hot(labels, len(label_names))
    M = Y.shape[1]

    eff = mode.effective(hp)
    info = {}
    if mode.uses_omega:
        fit = fit_alternating(X, Y, eff, solver_cfg, keep_fista_log=keep_fista_log)
        W, omega = fit.W, fit.omega
        info.update(
            objective=fit.objectives[-1],
            objectives=fit.objectives,
            outer_iterations=fit.n_outer,
            degenerate=fit.degenerate,
            fista_log=fit.fista_log,
        )
    else:
        log = [] if keep_fista_log else None
        ident = np.eye(M) / M
        W = solve_w(X, Y, ident, eff, solver_cfg, penalty=mode.penalty, log=log)
        omega = None
        final = objective(X, Y, W, ident, eff, eig_floor=solver_cfg.eig_floor, penalty=mode.penalty)
        info.update(objective=final, objectives=[final], outer_iterations=1, degenerate=False, fista_log=log or [])

    model = TrainedModel(fs, W, list(label_names), mode, hp, omega, center, scale, info)
    pred = np.argmax(X @ W, axis=1)
    info["train_accuracy"] = float(np.mean(pred == labels))
    info["nonzero_rows"] = int(np.count_nonzero(np.any(W != 0, axis=1)))
    return model


def predict(model: TrainedModel, act: Activity) -> Tuple[int, np.ndarray]:
    """Class index and per-class scores ``W^T x``; ties go to the lowest index."""
    x = model.transform(featurize(act, model.feature_space)[None, :])[0]
    scores = model.W.T @ x
    return int(np.argmax(scores)), scores


def predict_many(model: TrainedModel, activities: Sequence[Activity]) -> np.ndarray:
    if not activities:
        return np.zeros(0, dtype=int)
    scores = model.features(activities) @ model.W
    return np.argmax(scores, axis=1)


# ---------------------------------------------------------------------------
# serialization
#
# Plain text, tab separated.  Floats use repr(), the shortest decimal that
# round-trips, so a loaded model predicts bit-identically.


def _row(values) -> str:
    return "\t".join(repr(float(v)) for v in values)


def dumps_model(model: TrainedModel) -> str:
    for name in model.label_names:
        if "\t" in name or "\n" in name:
            raise ValidationError(f"label {name!r} contains a tab or newline")
    hp = model.hyperparams
    D, M = model.W.shape
    out = io.StringIO()
    w = out.write
    w(MAGIC + "\n")
    w(f"mode\t{model.mode.value}\n")
    w("labels\t" + "\t".join(model.label_names) + "\n")
    w(f"lambda\t{hp.lam!r}\ngamma\t{hp.gamma!r}\ntheta\t{hp.theta!r}\n")
    w(f"window\t{model.window}\n")
    if model.center is not None:
        w("center\t" + _row(model.center) + "\n")
        w("scale\t" + _row(model.scale) + "\n")
    if model.omega is not None:
        w(f"omega\t{M}\n")
        for r in model.omega:
            w(_row(r) + "\n")
    w(f"W\t{D}\t{M}\n")
    for r in model.W:
        w(_row(r) + "\n")
    w(f"patterns\t{D}\n")
    w(format_patterns(model.feature_space))
    return out.getvalue()


def loads_model(text: str, path=None) -> TrainedModel:
    lines = text.split("\n")
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ParseError("unexpected end of model file", pos, path)
        pos += 1
        return lines[pos - 1]

    def fields(expected):
        line = take()
        parts = line.split("\t")
        if parts[0] != expected:
            raise ParseError(f"expected {expected!r} record, got {parts[0]!r}", pos, path)
        return parts[1:]

    def floats(line, n):
        try:
            vals = [float(v) for v in line.split("\t")]
        except ValueError:
            raise ParseError("malformed number", pos, path) from None
        if len(vals) != n:
            raise ParseError(f"expected {n} values, got {len(vals)}", pos, path)
        return vals

    if take() != MAGIC:
        raise ParseError("not a model file", 1, path)
    try:
        mode = ModelMode.parse(fields("mode")[0])
        labels = fields("labels")
        hp = Hyperparams(float(fields("lambda")[0]), float(fields("gamma")[0]), float(fields("theta")[0]))
        window = int(fields("window")[0])
    except (ValueError, IndexError) as exc:
        raise ParseError(str(exc), pos, path) from None
    center = scale = omega = None
    if lines[pos].startswith("center\t"):
        center = np.array([float(v) for v in take().split("\t")[1:]])
        scale = np.array([float(v) for v in take().split("\t")[1:]])
    M = len(labels)
    if lines[pos].startswith("omega\t"):
        take()
        omega = np.array([floats(take(), M) for _ in range(M)])
    dims = fields("W")
    D, M2 = int(dims[0]), int(dims[1])
    if M2 != M:
        raise ParseError("W column count does not match labels", pos, path)
    W = np.array([floats(take(), M) for _ in range(D)]).reshape(D, M)
    fields("patterns")
    fs = parse_patterns(lines[pos:], path=path)
    if fs.window != window:
        raise ParseError("pattern block window disagrees with model window", path=path)
    return TrainedModel(fs, W, labels, mode, hp, omega, center, scale)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read(), path=path)

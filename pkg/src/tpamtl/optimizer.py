"""Alternating minimization for the adaptive multi-task objective.

    F(W, Omega) = 1/2 ||XW - Y||_F^2 + lam * tr(W Omega^-1 W^T)
                  + gamma * ||W||_F^2 + theta * ||W||_{2,1}

subject to Omega PSD with unit trace.  W is updated by FISTA with
backtracking and objective-based momentum restart; Omega has the closed form
(W^T W)^{1/2} / tr((W^T W)^{1/2}).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DegenerateWeightsWarning, NonFiniteEncountered, ShapeMismatch, ValidationError

__all__ = [
    "Hyperparams",
    "SolverConfig",
    "FitResult",
    "one_hot",
    "check_task_covariance",
    "inverse_covariance",
    "l21_norm",
    "objective",
    "smooth_objective",
    "smooth_gradient",
    "prox_l21",
    "prox_l1",
    "solve_w",
    "solve_omega",
    "fit_alternating",
]


@dataclass(frozen=True)
class Hyperparams:
    """Regularization weights: task relatedness, ridge and group sparsity."""

    lam: float = 0.05
    gamma: float = 0.001
    theta: float = 0.01

    def __post_init__(self):
        for name in ("lam", "gamma", "theta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class SolverConfig:
    fista_max_iter: int = 5000
    fista_tol: float = 1e-8
    outer_max_iter: int = 50
    outer_tol: float = 1e-6
    eig_floor: float = 1e-8
    eta: float = 2.0

    def __post_init__(self):
        if self.fista_tol <= 0 or self.outer_tol <= 0 or self.eig_floor <= 0:
            raise ValidationError("tolerances and eig_floor must be > 0")
        if self.fista_max_iter < 1 or self.outer_max_iter < 1:
            raise ValidationError("iteration caps must be >= 1")
        if not self.eta > 1:
            raise ValidationError("backtracking factor eta must be > 1")


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    if labels.ndim != 1:
        raise ShapeMismatch("labels must be one-dimensional")
    if n_classes < 2:
        raise ValidationError("need at least two classes")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValidationError("label index out of range")
    Y = np.zeros((labels.size, n_classes))
    Y[np.arange(labels.size), labels] = 1.0
    return Y


def _check_shapes(X, Y, W=None, omega=None):
    if X.ndim != 2 or Y.ndim != 2:
        raise ShapeMismatch("X and Y must be matrices")
    N, D = X.shape
    if Y.shape[0] != N:
        raise ShapeMismatch(f"X has {N} rows but Y has {Y.shape[0]}")
    M = Y.shape[1]
    if W is not None and W.shape != (D, M):
        raise ShapeMismatch(f"W must be {D}x{M}, got {W.shape[0]}x{W.shape[1]}")
    if omega is not None and omega.shape != (M, M):
        raise ShapeMismatch(f"Omega must be {M}x{M}, got {omega.shape}")


def check_task_covariance(omega: np.ndarray, atol: float = 1e-10) -> None:
    """Raise ``ValidationError`` unless `omega` is symmetric, PSD and unit trace."""
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ShapeMismatch("Omega must be square")
    if np.max(np.abs(omega - omega.T)) > atol:
        raise ValidationError("Omega is not symmetric")
    if np.linalg.eigvalsh(omega).min() < -atol:
        raise ValidationError("Omega is not positive semi-definite")
    if abs(np.trace(omega) - 1.0) > 1e-8:
        raise ValidationError("Omega must have unit trace")


def inverse_covariance(omega: np.ndarray, eig_floor: float = 1e-8) -> np.ndarray:
    """Omega^-1 with eigenvalues floored at ``eig_floor * tr(Omega) / M``."""
    omega = 0.5 * (omega + omega.T)
    M = omega.shape[0]
    vals, vecs = np.linalg.eigh(omega)
    floor = eig_floor * max(np.trace(omega), 0.0) / M
    if floor <= 0:
        floor = eig_floor
    vals = np.maximum(vals, floor)
    inv = (vecs / vals) @ vecs.T
    return 0.5 * (inv + inv.T)


def l21_norm(W: np.ndarray) -> float:
    return float(np.sum(np.sqrt(np.sum(W * W, axis=1))))


def smooth_objective(X, Y, W, omega_inv, hp: Hyperparams) -> float:
    R = X @ W - Y
    val = 0.5 * np.sum(R * R) + hp.gamma * np.sum(W * W)
    if hp.lam:
        val += hp.lam * np.sum((W @ omega_inv) * W)
    return float(val)


def objective(X, Y, W, omega, hp: Hyperparams, *, eig_floor: float = 1e-8, penalty: str = "l21") -> float:
    """Full objective with the group penalty (``penalty="l1"`` for the Lasso variant)."""
    X, Y, W = (np.asarray(a, dtype=float) for a in (X, Y, W))
    omega = np.asarray(omega, dtype=float)
    _check_shapes(X, Y, W, omega)
    val = smooth_objective(X, Y, W, inverse_covariance(omega, eig_floor), hp)
    return val + hp.theta * _penalty(W, penalty)


def _penalty(W, penalty):
    if penalty == "l21":
        return l21_norm(W)
    if penalty == "l1":
        return float(np.sum(np.abs(W)))
    raise ValidationError(f"unknown penalty {penalty!r}")


def smooth_gradient(X, Y, W, omega, hp: Hyperparams, *, eig_floor: float = 1e-8) -> np.ndarray:
    """Gradient of the differentiable part: X^T(XW - Y) + 2 lam W Omega^-1 + 2 gamma W."""
    X, Y, W = (np.asarray(a, dtype=float) for a in (X, Y, W))
    omega = np.asarray(omega, dtype=float)
    _check_shapes(X, Y, W, omega)
    return _grad(X, Y, W, inverse_covariance(omega, eig_floor), hp)


def _grad(X, Y, W, omega_inv, hp):
    G = X.T @ (X @ W - Y) + 2.0 * hp.gamma * W
    if hp.lam:
        G += 2.0 * hp.lam * (W @ omega_inv)
    return G


def prox_l21(V: np.ndarray, tau: float) -> np.ndarray:
    """Row-wise group soft thresholding, the prox of ``tau * ||.||_{2,1}``."""
    if tau < 0:
        raise ValidationError("tau must be >= 0")
    V = np.asarray(V, dtype=float)
    if tau == 0:
        return V.copy()
    norms = np.sqrt(np.sum(V * V, axis=1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
    return scale * V


def prox_l1(V: np.ndarray, tau: float) -> np.ndarray:
    """Element-wise soft thresholding."""
    if tau < 0:
        raise ValidationError("tau must be >= 0")
    V = np.asarray(V, dtype=float)
    return np.sign(V) * np.maximum(np.abs(V) - tau, 0.0)


_PROX = {"l21": prox_l21, "l1": prox_l1}


def _spectral_norm_sq(X: np.ndarray, n_iter: int = 50) -> float:
    """Power-iteration estimate of sigma_max(X^T X), from a fixed start."""
    D = X.shape[1]
    if D == 0 or not np.any(X):
        return 0.0
    v = np.ones(D) / math.sqrt(D)
    est = 0.0
    for _ in range(n_iter):
        u = X.T @ (X @ v)
        nrm = np.linalg.norm(u)
        if nrm == 0:
            # the all-ones start is orthogonal to the row space
            v = np.linspace(1.0, 2.0, D)
            v /= np.linalg.norm(v)
            continue
        v = u / nrm
        if abs(nrm - est) <= 1e-10 * nrm:
            est = nrm
            break
        est = nrm
    return float(est)


def solve_w(
    X,
    Y,
    omega,
    hp: Hyperparams,
    cfg: SolverConfig = SolverConfig(),
    W_init=None,
    *,
    penalty: str = "l21",
    log: Optional[List[dict]] = None,
) -> np.ndarray:
    """Minimize the objective over W for fixed Omega with FISTA.

    Every accepted iterate has objective no larger than the previous one:
    when the momentum step would increase it, momentum is reset and a plain
    proximal gradient step is taken from the last iterate instead.

    If `log` is a list, one dict per iteration is appended with keys
    ``iter``, ``objective``, ``step_size`` and ``rel_change``.
    """
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    omega = np.asarray(omega, dtype=float)
    _check_shapes(X, Y, omega=omega)
    D, M = X.shape[1], Y.shape[1]
    prox = _PROX.get(penalty)
    if prox is None:
        raise ValidationError(f"unknown penalty {penalty!r}")
    W = np.zeros((D, M)) if W_init is None else np.array(W_init, dtype=float)
    _check_shapes(X, Y, W)

    omega_inv = inverse_covariance(omega, cfg.eig_floor) if hp.lam else np.zeros((M, M))
    lip = _spectral_norm_sq(X) + 2.0 * hp.gamma
    if hp.lam:
        lip += 2.0 * hp.lam * float(np.linalg.eigvalsh(omega_inv).max())
    L = max(lip, 1e-12)

    N = X.shape[0]
    YtY = float(np.sum(Y * Y))
    XtY = X.T @ Y
    use_gram = D <= N
    XtX = X.T @ X if use_gram else None

    def f(Z):
        if use_gram:
            # 1/2||XZ-Y||^2 expanded, O(D^2 M) per call
            val = 0.5 * (np.sum((XtX @ Z) * Z) - 2.0 * np.sum(XtY * Z) + YtY)
        else:
            R = X @ Z - Y
            val = 0.5 * np.sum(R * R)
        val += hp.gamma * np.sum(Z * Z)
        if hp.lam:
            val += hp.lam * np.sum((Z @ omega_inv) * Z)
        return float(val)

    def grad(Z):
        G = (XtX @ Z - XtY) if use_gram else X.T @ (X @ Z - Y)
        G += 2.0 * hp.gamma * Z
        if hp.lam:
            G += 2.0 * hp.lam * (Z @ omega_inv)
        return G

    # the gradient mapping L*(Z - prox(Z - grad/L)) vanishes exactly at the
    # minimizer; requiring it small as well keeps the stopping rule from
    # firing on a flat stretch of the objective
    kkt_tol = cfg.fista_tol * max(1.0, float(np.linalg.norm(XtY)))

    def F(Z, fz=None):
        return (f(Z) if fz is None else fz) + hp.theta * _penalty(Z, penalty)

    def prox_step(Z, fz, gz, L):
        # backtrack until the quadratic upper bound holds at the new point
        while True:
            Wn = prox(Z - gz / L, hp.theta / L)
            diff = Wn - Z
            fn = f(Wn)
            bound = fz + np.sum(gz * diff) + 0.5 * L * np.sum(diff * diff)
            if fn <= bound + 1e-12 * max(1.0, abs(fz)):
                return Wn, fn, L
            L *= cfg.eta
            if not math.isfinite(L):
                raise NonFiniteEncountered("step size underflow in backtracking")

    fW = f(W)
    FW = F(W, fW)
    if not math.isfinite(FW):
        raise NonFiniteEncountered("objective is not finite at the starting point")
    Z, t = W.copy(), 1.0
    for it in range(1, cfg.fista_max_iter + 1):
        fz = fW if Z is W else f(Z)
        Wn, fn, L = prox_step(Z, fz, grad(Z), L)
        Fn = F(Wn, fn)
        if Fn > FW and Z is not W:
            # momentum overshot: restart from the last accepted iterate
            t = 1.0
            Wn, fn, L = prox_step(W, fW, grad(W), L)
            Fn = F(Wn, fn)
        if not (math.isfinite(Fn) and np.all(np.isfinite(Wn))):
            raise NonFiniteEncountered(f"non-finite iterate at FISTA iteration {it}")
        if Fn > FW:
            # rounding noise at the optimum; keep the better point
            Wn, fn, Fn = W, fW, FW
        rel = abs(FW - Fn) / max(abs(FW), 1e-300)
        if log is not None:
            log.append({"iter": it, "objective": Fn, "step_size": 1.0 / L, "rel_change": rel})
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        Z = Wn + ((t - 1.0) / t_next) * (Wn - W)
        stalled = Wn is W
        W, fW, FW, t = Wn, fn, Fn, t_next
        if stalled:
            break
        if rel < cfg.fista_tol:
            W_chk, _, L_chk = prox_step(W, fW, grad(W), L)
            if L_chk * np.linalg.norm(W_chk - W) <= kkt_tol:
                break
    return W


def solve_omega(W) -> np.ndarray:
    """Closed-form task covariance (W^T W)^{1/2} / tr((W^T W)^{1/2}).

    An all-zero W leaves the update undefined; ``I / M`` is returned and a
    :class:`DegenerateWeightsWarning` is issued.
    """
    W = np.asarray(W, dtype=float)
    M = W.shape[1]
    A = W.T @ W
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    # eigenvalues at round-off level are zero; the square root would inflate them
    vals[vals <= M * np.finfo(float).eps * max(vals.max(), 0.0)] = 0.0
    root = np.sqrt(vals)
    S = (vecs * root) @ vecs.T
    S = 0.5 * (S + S.T)
    tr = float(np.trace(S))
    if not (tr > 0 and math.isfinite(tr)):
        warnings.warn("W is zero; task covariance reset to I/M", DegenerateWeightsWarning, stacklevel=2)
        return np.eye(M) / M
    return S / tr


@dataclass
class FitResult:
    W: np.ndarray
    omega: np.ndarray
    objectives: List[float]
    n_outer: int
    degenerate: bool = False
    fista_log: List[dict] = field(default_factory=list)

    def __iter__(self):
        return iter((self.W, self.omega, self.objectives))


def fit_alternating(
    X,
    Y,
    hp: Hyperparams,
    cfg: SolverConfig = SolverConfig(),
    *,
    keep_fista_log: bool = False,
) -> FitResult:
    """Alternate FISTA on W and the closed-form Omega step from Omega = I/M.

    ``objectives`` holds the objective at the start and after every W and
    every Omega update, so it has ``2 * n_outer + 1`` entries.  Unpacking a
    result yields ``(W, omega, objectives)``.
    """
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    _check_shapes(X, Y)
    D, M = X.shape[1], Y.shape[1]
    omega = np.eye(M) / M
    W = np.zeros((D, M))
    fl = cfg.eig_floor
    trace = [objective(X, Y, W, omega, hp, eig_floor=fl)]
    log: Optional[List[dict]] = [] if keep_fista_log else None
    degenerate = False
    n_outer = 0
    for n_outer in range(1, cfg.outer_max_iter + 1):
        W = solve_w(X, Y, omega, hp, cfg, W_init=W, log=log)
        trace.append(objective(X, Y, W, omega, hp, eig_floor=fl))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateWeightsWarning)
            omega_new = solve_omega(W)
        if any(issubclass(w.category, DegenerateWeightsWarning) for w in caught):
            degenerate = True
        F_new = objective(X, Y, W, omega_new, hp, eig_floor=fl)
        if F_new <= trace[-1]:
            omega = omega_new
        else:
            # the floored inverse can make the exact minimizer look worse by
            # rounding; keep the previous Omega in that case
            F_new = trace[-1]
        trace.append(F_new)
        prev = trace[-3]
        if abs(prev - F_new) <= cfg.outer_tol * max(abs(prev), 1e-300):
            break
    return FitResult(W, omega, trace, n_outer, degenerate, log or [])

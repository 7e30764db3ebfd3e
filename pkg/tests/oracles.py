"""Independent reference computations used by the tests.

Nothing here calls into the pattern or optimizer code paths it checks; only
the basic types and ``allen_relation`` are shared.
"""

import itertools

import numpy as np

from tpamtl.intervals import Action, allen_relation, normalize_activity
from tpamtl.patterns import TemporalPattern

A, B, C, D = 0, 1, 2, 3


def act(*triples, label=None):
    """Activity from ``(start, action_id, end)`` triples."""
    return normalize_activity(triples, label=label)


def random_activity(rng, max_actions=5, n_ids=4, horizon=12, max_len=6, label=None):
    n = int(rng.integers(1, max_actions + 1))
    triples = []
    for _ in range(n):
        s = int(rng.integers(0, horizon))
        e = s + int(rng.integers(1, max_len + 1))
        triples.append((s, int(rng.integers(0, n_ids)), e))
    return normalize_activity(triples, label=label)


def enumerate_patterns(activity, max_dim):
    """Every pattern realized in `activity` up to `max_dim`, with its index tuples."""
    acts = activity.actions
    found = {}
    for k in range(1, max_dim + 1):
        for idx in itertools.combinations(range(len(acts)), k):
            sel = [acts[i] for i in idx]
            ids = tuple(a.action_id for a in sel)
            rels = tuple(allen_relation(x, y) for x, y in itertools.combinations(sel, 2))
            found.setdefault(TemporalPattern(ids, rels), []).append(idx)
    return found


def sweep_support(pattern, activity, window, instances=None):
    """Window-position sweep on a 1-tick grid, sampled at cell midpoints.

    A window ``[t, t + w]`` observes an instance when it meets every one of
    its intervals.  Counting midpoints ``t + 1/2`` avoids boundary ties, so
    for integer endpoints the count equals the visible length exactly.
    """
    if instances is None:
        instances = enumerate_patterns(activity, pattern.dim).get(pattern, [])
    acts = activity.actions
    lo = activity.origin - window
    hi = activity.end
    count = 0
    for t in range(lo, hi):
        mid = t + 0.5
        for idx in instances:
            if all(acts[i].start < mid + window and mid < acts[i].end for i in idx):
                count += 1
                break
    return count / (window + activity.span)


def brute_force_frequent(activities, window, minsup, max_dim):
    """Frequent set by exhaustive enumeration with max-over-activities aggregation."""
    best = {}
    for a in activities:
        for p, inst in enumerate_patterns(a, max_dim).items():
            s = sweep_support(p, a, window, inst)
            if s > best.get(p, -1.0):
                best[p] = s
    return {p for p, s in best.items() if s >= minsup}


def naive_objective(X, Y, W, omega_inv, lam, gamma, theta):
    """Scalar-loop evaluation of the full objective."""
    N, Dm = X.shape
    M = Y.shape[1]
    loss = 0.0
    for n in range(N):
        for m in range(M):
            pred = 0.0
            for d in range(Dm):
                pred += X[n, d] * W[d, m]
            loss += (pred - Y[n, m]) ** 2
    rel = 0.0
    for d in range(Dm):
        for i in range(M):
            for j in range(M):
                rel += W[d, i] * omega_inv[i, j] * W[d, j]
    ridge = sum(W[d, m] ** 2 for d in range(Dm) for m in range(M))
    group = sum(sum(W[d, m] ** 2 for m in range(M)) ** 0.5 for d in range(Dm))
    return 0.5 * loss + lam * rel + gamma * ridge + theta * group


def floored_inverse(omega, floor_rel=1e-8):
    vals, vecs = np.linalg.eigh(omega)
    vals = np.maximum(vals, floor_rel * np.trace(omega) / omega.shape[0])
    return vecs @ np.diag(1.0 / vals) @ vecs.T


def central_differences(fun, W, h=1e-6):
    G = np.zeros_like(W)
    for idx in np.ndindex(*W.shape):
        Wp = W.copy()
        Wm = W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        G[idx] = (fun(Wp) - fun(Wm)) / (2 * h)
    return G


def random_unit_trace_psd(rng, M):
    Q = rng.normal(size=(M, M))
    S = Q @ Q.T + 1e-3 * np.eye(M)
    return S / np.trace(S)

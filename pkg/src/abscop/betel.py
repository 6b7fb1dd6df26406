"""Exponentially tilted empirical likelihood for a scalar moment condition.

The entropy-maximising weights subject to ``sum p_i = 1`` and
``sum p_i h_i = 0`` have the form ``p_i = exp(t h_i) / sum_j exp(t h_j)``, where
``t`` minimises the convex function ``m(t) = log sum_i exp(t h_i)``. Solving
this one-dimensional dual replaces a search over the (n-1)-simplex.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .functionals import KindLike, moment_vector

GRAD_TOL = 1e-10
MAX_ITER = 200
ZERO_TOL = 1e-14


class Status(str, enum.Enum):
    CONVERGED = "converged"
    UNIFORM = "uniform"
    INFEASIBLE = "infeasible"
    NONCONVERGED = "nonconverged"


@dataclass(frozen=True)
class BetelSolution:
    tilt: float
    probabilities: np.ndarray
    log_likelihood: float
    status: Status
    iterations: int
    residual: float

    @property
    def converged(self) -> bool:
        return self.status in (Status.CONVERGED, Status.UNIFORM)


def _solve_rows(H: np.ndarray, tol: float = GRAD_TOL, max_iter: int = MAX_ITER):
    """Safeguarded Newton on m'(t) = 0 for every row of ``H`` at once.

    Rows are rescaled by ``max |h|`` so the tolerance is relative. Returns
    (tilt, log-likelihood, status codes, iterations).
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    B, n = H.shape
    scale = np.max(np.abs(H), axis=1)
    safe = np.where(scale > 0, scale, 1.0)
    Hs = H / safe[:, None]
    Hs = np.where(np.abs(Hs) <= ZERO_TOL, 0.0, Hs)

    all_zero = scale == 0
    all_zero |= np.all(Hs == 0.0, axis=1)
    feasible = (Hs.min(axis=1) < 0) & (Hs.max(axis=1) > 0)

    status = np.full(B, Status.NONCONVERGED.value, dtype=object)
    status[all_zero] = Status.UNIFORM.value
    status[~all_zero & ~feasible] = Status.INFEASIBLE.value

    t = np.zeros(B)
    lo = np.full(B, -np.inf)
    hi = np.full(B, np.inf)
    iters = np.zeros(B, dtype=int)
    active = feasible & ~all_zero
    best_t = t.copy()
    best_g = np.full(B, np.inf)

    for it in range(max_iter + 1):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        Ha, ta = Hs[rows], t[rows]
        z = ta[:, None] * Ha
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        w /= w.sum(axis=1, keepdims=True)
        g = np.sum(w * Ha, axis=1)
        var = np.sum(w * Ha * Ha, axis=1) - g * g

        better = np.abs(g) < best_g[rows]
        best_g[rows[better]] = np.abs(g[better])
        best_t[rows[better]] = ta[better]

        iters[rows] = it
        done = np.abs(g) <= tol
        status[rows[done]] = Status.CONVERGED.value
        active[rows[done]] = False
        if it == max_iter:
            break
        keep = ~done
        rows, ta, g, var = rows[keep], ta[keep], g[keep], var[keep]

        # m' is increasing: shrink the bracket around the root
        lo[rows] = np.where(g < 0, ta, lo[rows])
        hi[rows] = np.where(g > 0, ta, hi[rows])
        l, h = lo[rows], hi[rows]
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = ta - g / var
        inside = np.isfinite(newton) & (newton > l) & (newton < h)
        # open bracket: expand geometrically towards the root
        step = np.maximum(2.0 * np.abs(ta), 1.0)
        fallback = np.where(
            np.isfinite(l) & np.isfinite(h), 0.5 * (l + h), ta + np.where(g < 0, step, -step)
        )
        nxt = np.where(inside, newton, fallback)
        stalled = np.isfinite(l) & np.isfinite(h) & (h - l <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(l)))
        active[rows[stalled]] = False
        t[rows] = nxt

    nonconv = status == Status.NONCONVERGED.value
    t[nonconv] = best_t[nonconv]
    t[~feasible | all_zero] = 0.0

    tilt = np.zeros(B)
    loglik = np.full(B, -np.inf)
    ok = feasible & ~all_zero
    tilt[ok] = t[ok] / safe[ok]
    z = t[ok, None] * Hs[ok]
    loglik[ok] = np.sum(z, axis=1) - n * logsumexp(z, axis=1)
    loglik[all_zero] = -n * np.log(n)
    return tilt, loglik, status, iters


def solve_tilt(h) -> BetelSolution:
    """Maximum-entropy weights under the constraint ``sum p_i h_i = 0``.

    Infeasible constraints (zero not strictly inside the range of ``h``) return
    ``log_likelihood = -inf`` with status ``INFEASIBLE``; this is a legal
    weight, not an error. If the iteration cap is hit the best iterate is
    returned with status ``NONCONVERGED``.
    """
    h = np.asarray(getattr(h, "h", h), dtype=float).ravel()
    if h.size < 2:
        raise ValueError("need at least two moment values")
    if not np.all(np.isfinite(h)):
        raise ValueError("moment values must be finite")
    tilt, loglik, status, iters = _solve_rows(h[None, :])
    st = Status(status[0])
    n = h.size
    if st is Status.INFEASIBLE:
        p = np.full(n, np.nan)
        residual = float("nan")
    else:
        z = tilt[0] * h
        p = np.exp(z - logsumexp(z))
        residual = float(p @ h)
    return BetelSolution(float(tilt[0]), p, float(loglik[0]), st, int(iters[0]), residual)


def log_betel_many(g, phis, c=None, chunk: int = 2000) -> np.ndarray:
    """log L(phi) for each candidate ``phi``, with moments ``h = g - phi * c``.

    ``g`` (and ``c``) may be one statistic shared by all candidates or a
    ``(len(phis), n)`` stack with one row per candidate. ``c`` defaults to ones
    (mean-form moment conditions).
    """
    g = np.asarray(g, dtype=float)
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    c = None if c is None else np.asarray(c, dtype=float)
    out = np.empty(phis.size)
    for s in range(0, phis.size, chunk):
        sl = slice(s, s + chunk)
        G = g if g.ndim == 1 else g[sl]
        p = phis[sl, None]
        if c is None:
            H = G - p
        else:
            H = G - p * (c if c.ndim == 1 else c[sl])
        out[sl] = _solve_rows(np.broadcast_to(H, (p.shape[0], H.shape[-1])))[1]
    return out


def log_betel(kind: KindLike, U, phi: float) -> float:
    """log of the exponentially tilted empirical likelihood of ``phi`` on pseudo-data ``U``."""
    return float(_solve_rows(moment_vector(kind, U, phi).h[None, :])[1][0])

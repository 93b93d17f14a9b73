"""Simplex-constrained (weighted) least squares.

Solves ``min_p ||W^(1/2) (M p - b)||^2`` subject to ``p >= lower`` and,
optionally, ``sum(p) = total``.  Problems of this shape are small (a few
to a few hundred variables) but arrive in large batches, one per simulated
attention rule or bootstrap replication, so the implementation works on
stacked Gram matrices: an accelerated projected-gradient (FISTA) pass over
the whole batch followed by an exact active-set refinement of each problem.
The refinement pins the active face and solves the KKT equations on it, so
clean problems finish at machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import SolverError, ValidationError

#: Entries of a solution below this are treated as at the lower bound.
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class LstsqResult:
    """Solution bundle of one constrained least-squares problem.

    ``objective`` is the weighted squared residual norm at ``p``;
    ``kkt_residual`` the normalized stationarity gap (see
    :func:`kkt_residual`).
    """

    p: NDArray[np.float64]
    objective: float
    kkt_residual: float
    converged: bool


def project_simplex(v: NDArray, total: float = 1.0) -> NDArray:
    """Euclidean projection of each row of ``v`` onto the scaled simplex."""
    v = np.asarray(v, dtype=np.float64)
    shape = v.shape
    flat = v.reshape(-1, shape[-1])
    srt = np.sort(flat, axis=1)[:, ::-1]
    csum = np.cumsum(srt, axis=1) - total
    arange = np.arange(1, shape[-1] + 1)
    cond = srt - csum / arange > 0
    rho = shape[-1] - np.argmax(cond[:, ::-1], axis=1) - 1
    theta = csum[np.arange(flat.shape[0]), rho] / (rho + 1)
    out = np.maximum(flat - theta[:, None], 0.0)
    return out.reshape(shape)


def _grams(M: NDArray, b: NDArray, w: NDArray | None):
    """Batched Gram matrices G = M'WM and linear terms h = M'Wb."""
    if w is None:
        G = np.einsum("kmi,kmj->kij", M, M, optimize=True)
        h = np.einsum("kmi,km->ki", M, b, optimize=True)
    else:
        Mw = M * w[:, :, None]
        G = np.einsum("kmi,kmj->kij", Mw, M, optimize=True)
        h = np.einsum("kmi,km->ki", Mw, b, optimize=True)
    return G, h


def kkt_residual(
    G: NDArray, h: NDArray, p: NDArray, *, sum_constraint: bool
) -> NDArray:
    """Normalized stationarity gap of candidate solutions (batched).

    With the sum constraint the gradient must be constant on the support
    and no smaller off it; the gap is (max support gradient - min gradient).
    Without it, optimality needs zero gradient on the support and
    nonnegative gradient off it.  Both are scaled by 1 + max |gradient|.
    """
    g = 2.0 * (np.einsum("kij,kj->ki", G, p, optimize=True) - h)
    scale = 1.0 + np.abs(g).max(axis=1)
    on = p > SUPPORT_TOL
    if sum_constraint:
        g_support_max = np.where(on, g, -np.inf).max(axis=1)
        res = g_support_max - g.min(axis=1)
    else:
        stat = np.abs(np.where(on, g, 0.0)).max(axis=1)
        neg = np.maximum(0.0, -np.where(on, 0.0, g)).max(axis=1)
        res = np.maximum(stat, neg)
    return np.maximum(res, 0.0) / scale


def _fista(G, h, r0, total, *, sum_constraint, max_iter, tol):
    """Accelerated projected gradient on the batch; returns (r, iterations)."""
    k, d = r0.shape
    lips = 2.0 * np.linalg.eigvalsh(G)[:, -1]
    lips = np.maximum(lips, 1e-300)
    step = (1.0 / lips)[:, None]

    def proj(v):
        if sum_constraint:
            return project_simplex(v, total)
        return np.maximum(v, 0.0)

    r = proj(r0.copy())
    y = r.copy()
    t_acc = 1.0
    it = 0
    check_every = 32
    while it < max_iter:
        grad = 2.0 * (np.einsum("kij,kj->ki", G, y, optimize=True) - h)
        r_new = proj(y - step * grad)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = r_new + ((t_acc - 1.0) / t_new) * (r_new - r)
        # Restart acceleration when momentum points uphill.
        ascent = np.einsum("ki,ki->k", r_new - r, grad) > 0
        if np.any(ascent):
            y[ascent] = r_new[ascent]
        r, t_acc = r_new, t_new
        it += 1
        if it % check_every == 0:
            if kkt_residual(G, h, r, sum_constraint=sum_constraint).max() < tol:
                break
    return r, it


def _polish_one(G, h, r, *, total, sum_constraint, tol):
    """Exact active-set refinement of a single problem in Gram form."""
    d = h.shape[0]
    support = r > max(SUPPORT_TOL, 1e-9 * max(r.max(), 1.0))
    if not support.any():
        support[int(np.argmax(h))] = True
    best = r
    for _ in range(4 * d + 8):
        idx = np.nonzero(support)[0]
        s = idx.size
        if sum_constraint:
            kkt = np.zeros((s + 1, s + 1))
            kkt[:s, :s] = 2.0 * G[np.ix_(idx, idx)]
            kkt[:s, s] = 1.0
            kkt[s, :s] = 1.0
            rhs = np.concatenate([2.0 * h[idx], [total]])
        else:
            kkt = 2.0 * G[np.ix_(idx, idx)]
            rhs = 2.0 * h[idx]
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        r_s = sol[:s]
        if np.any(r_s < -1e-12):
            # Drop the most negative coordinate and retry.
            support[idx[int(np.argmin(r_s))]] = False
            if not support.any():
                break
            continue
        cand = np.zeros(d)
        cand[idx] = np.maximum(r_s, 0.0)
        g = 2.0 * (G @ cand - h)
        best = cand
        if sum_constraint:
            nu = g[idx].max()
            entering = np.nonzero(~support & (g < nu - 1e-14 * (1 + abs(nu))))[0]
        else:
            entering = np.nonzero(~support & (g < -1e-14 * (1 + np.abs(g).max())))[0]
        if entering.size == 0:
            break
        support[entering[int(np.argmin(g[entering]))]] = True
    return best


def constrained_lstsq_batch(
    M: NDArray,
    b: NDArray,
    *,
    weights: NDArray | None = None,
    lower: float = 0.0,
    total: float = 1.0,
    sum_constraint: bool = True,
    max_iter: int = 50_000,
    kkt_tol: float = 1e-8,
    fista_iters: int | None = None,
    polish: bool = True,
) -> tuple[NDArray, NDArray, NDArray]:
    """Solve a batch of bound/simplex-constrained least-squares problems.

    Args:
        M: (k, m, d) stacked design matrices (or (m, d) for a single one,
            broadcast against ``b``).
        b: (k, m) or (m,) targets.
        weights: optional (k, m) or (m,) nonnegative diagonal weights.
        lower: common componentwise lower bound on the solution.
        total: required sum of each solution when ``sum_constraint``.
        sum_constraint: impose ``sum(p) = total``; otherwise only
            ``p >= lower``.
        max_iter: accelerated-gradient iteration cap.
        kkt_tol: target normalized KKT residual.
        fista_iters: optional explicit iteration budget before refinement
            (defaults to an internal schedule).
        polish: run the exact active-set refinement after the gradient pass.

    Returns:
        (p, objective, kkt_res): arrays of shape (k, d), (k,), (k,).
    """
    M = np.asarray(M, dtype=np.float64)
    single = M.ndim == 2
    if single:
        M = M[None]
    k, m, d = M.shape
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), (k, m))
    w = None
    if weights is not None:
        w = np.broadcast_to(np.asarray(weights, dtype=np.float64), (k, m))
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")

    if sum_constraint:
        span = total - d * lower
        if span < -1e-12:
            raise ValidationError(
                f"infeasible constraints: {d} components with lower bound "
                f"{lower} cannot sum to {total}"
            )
        span = max(span, 0.0)
    else:
        span = 1.0

    # Substitute p = lower + span * r with r on the unit simplex (or p =
    # lower + r, r >= 0, without the sum constraint).
    shift = lower * M.sum(axis=2)  # M @ (lower * ones)
    scale = span if sum_constraint else 1.0
    if sum_constraint and span == 0.0:
        # The lower bounds use up the whole budget: unique feasible point.
        p = np.full((k, d), lower)
        resid = np.einsum("kmd,kd->km", M, p, optimize=True) - b
        obj = ((resid**2) if w is None else w * resid**2).sum(axis=1)
        zero = np.zeros(k)
        return (p[0], float(obj[0]), 0.0) if single else (p, obj, zero)

    c = (b - shift) / max(scale, 1e-300)
    G, h = _grams(M, c, w)
    r0 = np.full((k, d), (1.0 / d) if sum_constraint else 0.0)
    budget = fista_iters if fista_iters is not None else min(max_iter, 400)
    r, it = _fista(
        G, h, r0, 1.0, sum_constraint=sum_constraint, max_iter=budget, tol=kkt_tol
    )
    if polish:
        for i in range(k):
            r[i] = _polish_one(
                G[i], h[i], r[i], total=1.0, sum_constraint=sum_constraint,
                tol=kkt_tol,
            )
    res = kkt_residual(G, h, r, sum_constraint=sum_constraint)
    # A second, longer gradient pass for any stragglers.
    bad = res > kkt_tol
    if np.any(bad) and it < max_iter:
        r_bad, _ = _fista(
            G[bad], h[bad], r[bad], 1.0,
            sum_constraint=sum_constraint, max_iter=max_iter - it, tol=kkt_tol,
        )
        r[bad] = r_bad
        if polish:
            for j, i in enumerate(np.nonzero(bad)[0]):
                r[i] = _polish_one(
                    G[i], h[i], r[i], total=1.0,
                    sum_constraint=sum_constraint, tol=kkt_tol,
                )
        res = kkt_residual(G, h, r, sum_constraint=sum_constraint)

    p = lower + scale * r
    if sum_constraint:
        # Feasibility exactly: renormalize the free part and clamp dust.
        free = np.maximum(p - lower, 0.0)
        tot = free.sum(axis=1, keepdims=True)
        good = tot[:, 0] > 0
        free[good] *= span / tot[good]
        p = lower + free
    else:
        p = np.maximum(p, lower)
    resid = np.einsum("kmd,kd->km", M, p, optimize=True) - b
    obj = ((resid**2) if w is None else w * resid**2).sum(axis=1)
    if single:
        return p[0], obj[0], res[0]
    return p, obj, res


def constrained_lstsq(
    M: NDArray,
    b: NDArray,
    *,
    weights: NDArray | None = None,
    lower: float = 0.0,
    total: float = 1.0,
    sum_constraint: bool = True,
    max_iter: int = 50_000,
    kkt_tol: float = 1e-8,
) -> LstsqResult:
    """Single-problem front end to :func:`constrained_lstsq_batch`.

    Raises:
        SolverError: the KKT residual stayed above ``kkt_tol`` after the
            full iteration budget; the error carries the best iterate.
    """
    p, obj, res = constrained_lstsq_batch(
        M,
        b,
        weights=weights,
        lower=lower,
        total=total,
        sum_constraint=sum_constraint,
        max_iter=max_iter,
        kkt_tol=kkt_tol,
    )
    converged = bool(res <= kkt_tol)
    result = LstsqResult(
        p=p,
        objective=float(obj),
        kkt_residual=float(res),
        converged=converged,
    )
    if not converged:
        raise SolverError(
            f"constrained least squares did not reach KKT residual "
            f"{kkt_tol:g} (got {float(res):g})",
            iterate=result,
            residual=float(res),
        )
    return result

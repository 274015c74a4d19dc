"""Homogeneous hard-margin SVM solvers.

The maximum-margin program  max_{unit w} min_i y_i <x_i, w>  is solved
through the equivalent convex program

    minimize ||v||^2   subject to   y_i <x_i, v> >= 1,

whose optimum recovers w = v / ||v|| and margin = 1 / ||v||.  The dual is
coordinate-ascent friendly: maintain v = sum_i alpha_i y_i x_i with
alpha >= 0 and sweep coordinates cyclically with the closed-form update
alpha_i <- max(0, alpha_i + (1 - y_i <x_i, v>) / ||x_i||^2).  Sweeps stop
once the largest projected-gradient entry falls below the KKT tolerance.

Infeasibility (no strict separator) makes the dual unbounded.  Any dual
iterate certifies margin* <= ||v|| / sum(alpha), so the solver declares a
sample infeasible as soon as that bound drops below a floor; the dual
objective cap 1/tol^2 is also enforced.  Margins below the floor only occur
for contradictory or near-contradictory data, which this lab treats as a
data bug.

``_ascend`` runs many problems of equal shape at once; updates are
elementwise per problem, so batching is exactly equivalent to solving each
problem alone (converged problems freeze and stop changing).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .concepts import LabeledSample
from .errors import InfeasibleSampleError, SizeGuardError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 200_000
#: Samples whose best achievable margin is below this are reported infeasible.
INFEASIBLE_MARGIN_FLOOR = 1e-4

_ORACLE_MAX_POINTS = 10
_ORACLE_MAX_DIM = 10


@dataclass(frozen=True)
class SvmSolution:
    """Unit direction, achieved margin, dual coefficients, sweep count.

    The dual certificate reconstructs the direction: w is the normalization
    of sum_i alpha_i y_i x_i, and the margin is min_i y_i <x_i, w>.
    """

    direction: np.ndarray
    margin: float
    dual_certificate: np.ndarray
    iterations: int


@dataclass(frozen=True)
class BatchSvmResult:
    directions: np.ndarray  # (problems, d); rows of infeasible problems are zero
    margins: np.ndarray  # (problems,)
    dual_certificates: np.ndarray  # (problems, n)
    sweeps: np.ndarray  # (problems,)
    feasible: np.ndarray  # (problems,) bool


_POLISH_START = 16
_POLISH_EVERY = 8
_ENUM_POLISH_START = 32
_ENUM_POLISH_EVERY = 16
_ENUM_MAX_SUPPORT = 8


def _polish_direct(
    signed: np.ndarray, alpha: np.ndarray, tol: float, eligible: np.ndarray
) -> np.ndarray:
    """Vectorized exact finish on each problem's current positive support.

    Coordinate ascent finds the support set long before the values settle,
    and near-parallel support pairs make the value phase crawl.  For every
    eligible problem whose positive set has at most d+1 coordinates, solve
    the equality-constrained least-norm system on that set in one batched
    pseudo-inverse per support size, and adopt solutions that satisfy the
    full KKT conditions at tolerance (any such point is the global
    optimum).  ``alpha`` is updated in place; returns the adopted mask.
    """
    n_prob, n, d = signed.shape
    support = alpha > 0.0
    sizes = np.where(eligible, support.sum(axis=1), -1)
    adopted = np.zeros(n_prob, dtype=bool)
    for s in range(1, d + 2):
        rows = np.flatnonzero(sizes == s)
        if not len(rows):
            continue
        cols = np.nonzero(support[rows])[1].reshape(len(rows), s)
        blocks = signed[rows[:, None], cols]  # (r, s, d)
        grams = blocks @ blocks.swapaxes(1, 2)
        lam = np.linalg.pinv(grams) @ np.ones(s)
        resid = np.abs(grams @ lam[..., None] - 1.0).max(axis=(1, 2))
        viable = (resid <= 1e-9) & (lam.min(axis=1) >= 0.0)
        if not viable.any():
            continue
        v = np.einsum("rs,rsd->rd", lam, blocks)
        grad = np.einsum("rnd,rd->rn", signed[rows], v) - 1.0
        pg = np.where(support[rows], np.abs(grad), np.maximum(-grad, 0.0))
        ok = viable & (pg.max(axis=1) <= tol)
        for where in np.flatnonzero(ok):
            p = rows[where]
            alpha[p] = 0.0
            alpha[p, cols[where]] = lam[where]
            adopted[p] = True
    return adopted


def _polish_enumerate(
    signed: np.ndarray, alpha: np.ndarray, tol: float, eligible: np.ndarray
) -> np.ndarray:
    """Batched subset enumeration over each problem's positive support.

    For problems whose direct solve fails (the positive set is a strict,
    possibly degenerate superset of the true support), enumerate all
    subsets of it up to size d+1, solving every (problem, subset)
    candidate in one batched pseudo-inverse per subset size and adopting
    the first fully KKT-feasible candidate per problem (sizes ascending,
    then lexicographic).  ``alpha`` is updated in place; returns the
    adopted mask.
    """
    n_prob, n, d = signed.shape
    adopted = np.zeros(n_prob, dtype=bool)
    supports: dict[int, np.ndarray] = {}
    for p in np.flatnonzero(eligible):
        positive = np.flatnonzero(alpha[p] > 0.0)
        if 0 < len(positive) <= _ENUM_MAX_SUPPORT:
            supports[p] = positive
    if not supports:
        return adopted
    for size in range(1, d + 2):
        probs = []
        cols = []
        for p, positive in supports.items():
            if adopted[p] or len(positive) < size:
                continue
            for sub in combinations(positive.tolist(), size):
                probs.append(p)
                cols.append(sub)
        if not probs:
            continue
        probs_arr = np.asarray(probs)
        cols_arr = np.asarray(cols)
        blocks = signed[probs_arr[:, None], cols_arr]  # (m, size, d)
        grams = blocks @ blocks.swapaxes(1, 2)
        lam = np.linalg.pinv(grams) @ np.ones(size)
        resid = np.abs(grams @ lam[..., None] - 1.0).max(axis=(1, 2))
        viable = np.flatnonzero((resid <= 1e-9) & (lam.min(axis=1) >= 0.0))
        if not len(viable):
            continue
        v = np.einsum("ms,msd->md", lam[viable], blocks[viable])
        grad = np.einsum("mnd,md->mn", signed[probs_arr[viable]], v) - 1.0
        pos_part = np.maximum(-grad, 0.0)
        # On support coordinates the KKT condition is |grad|, elsewhere
        # max(-grad, 0); patch the support columns in place.
        rows = np.arange(len(viable))[:, None]
        pg = pos_part
        pg[rows, cols_arr[viable]] = np.abs(grad[rows, cols_arr[viable]])
        passing = np.flatnonzero(pg.max(axis=1) <= tol)
        for m in passing:
            p = int(probs_arr[viable[m]])
            if adopted[p]:
                continue  # earlier candidate in this size already won
            alpha[p] = 0.0
            alpha[p, cols_arr[viable[m]]] = lam[viable[m]]
            adopted[p] = True
    return adopted


def _ascend(
    points: np.ndarray,
    labels: np.ndarray,
    tol: float,
    max_sweeps: int,
    infeasible_floor: float,
) -> BatchSvmResult:
    """Dual coordinate ascent over a stack of equally-shaped problems.

    Finished problems (converged or infeasible) are compacted out of the
    working arrays; their state is frozen, so batching never changes any
    individual problem's result.
    """
    pts = np.asarray(points, dtype=np.float64)
    labs = np.asarray(labels, dtype=np.float64)
    n_prob, n, d = pts.shape
    signed_all = labs[:, :, None] * pts  # y_i x_i
    alpha_all = np.zeros((n_prob, n))
    feasible = np.ones(n_prob, dtype=bool)
    sweeps_all = np.zeros(n_prob, dtype=np.int64)

    work = np.arange(n_prob)  # problems still iterating
    signed = signed_all.copy()
    inv_sq = 1.0 / np.maximum(np.einsum("pnd,pnd->pn", signed, signed), 1e-30)
    alpha = np.zeros((n_prob, n))
    v = np.zeros((n_prob, d))
    alpha_sum = np.zeros(n_prob)

    dual_cap = 1.0 / (tol * tol)
    for sweep in range(1, max_sweeps + 1):
        max_pg = np.zeros(len(work))
        for i in range(n):
            zi = signed[:, i, :]
            grad = np.einsum("pd,pd->p", v, zi) - 1.0  # d(-dual)/d(alpha_i)
            ai = alpha[:, i]
            pg = np.where(ai > 0.0, np.abs(grad), np.maximum(-grad, 0.0))
            np.maximum(max_pg, pg, out=max_pg)
            delta = np.maximum(ai - grad * inv_sq[:, i], 0.0) - ai
            alpha[:, i] += delta
            alpha_sum += delta
            v += delta[:, None] * zi
        sweeps_all[work] = sweep

        v_norm = np.linalg.norm(v, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            margin_upper = np.where(alpha_sum > 0.0, v_norm / np.maximum(alpha_sum, 1e-300), np.inf)
        dual_obj = alpha_sum - 0.5 * v_norm**2
        blown = (margin_upper < infeasible_floor) | (dual_obj > dual_cap)
        done = (max_pg <= tol) | blown
        if sweep >= _POLISH_START and sweep % _POLISH_EVERY == 0 and not done.all():
            done |= _polish_direct(signed, alpha, tol, ~done)
            if sweep >= _ENUM_POLISH_START and sweep % _ENUM_POLISH_EVERY == 0:
                done |= _polish_enumerate(signed, alpha, tol, ~done)
        if done.any():
            feasible[work[blown]] = False
            alpha_all[work[done]] = alpha[done]
            keep = ~done
            work = work[keep]
            if not len(work):
                break
            signed = signed[keep]
            inv_sq = inv_sq[keep]
            alpha = alpha[keep]
            v = v[keep]
            alpha_sum = alpha_sum[keep]
    else:
        alpha_all[work] = alpha  # sweep budget exhausted; keep best iterates

    # Rebuild v from alpha in one deterministic reduction so the certificate
    # reconstructs the direction to float accuracy.
    v_final = np.einsum("pn,pnd->pd", alpha_all, signed_all)
    v_norm = np.linalg.norm(v_final, axis=1)
    ok = feasible & (v_norm > 1e-300)
    directions = np.zeros((n_prob, d))
    directions[ok] = v_final[ok] / v_norm[ok, None]
    margins = np.full(n_prob, -np.inf)
    if ok.any():
        achieved = np.einsum("pnd,pd->pn", signed_all[ok], directions[ok])
        margins[ok] = achieved.min(axis=1)
    feasible = ok
    return BatchSvmResult(
        directions=directions,
        margins=margins,
        dual_certificates=alpha_all,
        sweeps=sweeps_all,
        feasible=feasible,
    )


def hard_svm_batch(
    points: np.ndarray,
    labels: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    infeasible_floor: float = INFEASIBLE_MARGIN_FLOOR,
) -> BatchSvmResult:
    """Solve a (problems, n, d) stack of hard-SVM instances at once."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    floor = max(infeasible_floor, tol)
    return _ascend(points, labels, tol, max_sweeps, floor)


def hard_svm(
    sample: LabeledSample,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> SvmSolution:
    """Maximum-margin separator of a labeled sample, to KKT tolerance tol.

    Raises InfeasibleSampleError when no strict separator exists (or the
    sample's best margin is below the infeasibility floor).
    """
    if len(sample) == 0:
        raise ValueError("sample must be nonempty")
    res = hard_svm_batch(sample.points[None, :, :], sample.labels[None, :], tol, max_sweeps)
    if not res.feasible[0]:
        raise InfeasibleSampleError(
            "no strict linear separator for this sample (margin below "
            f"{max(INFEASIBLE_MARGIN_FLOOR, tol):g})"
        )
    return SvmSolution(
        direction=res.directions[0],
        margin=float(res.margins[0]),
        dual_certificate=res.dual_certificates[0],
        iterations=int(res.sweeps[0]),
    )


def separates_with_margin(direction: np.ndarray, sample: LabeledSample, margin: float) -> bool:
    """True iff y <x, direction> >= margin for every pair, with no tolerance."""
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != (sample.dim,):
        raise ValueError(f"direction shape {direction.shape} vs sample dim {sample.dim}")
    return bool(np.all(sample.labels * (sample.points @ direction) >= margin))


def svm_by_enumeration(sample: LabeledSample) -> SvmSolution:
    """Exact optimum via support-subset enumeration; small instances only.

    For every subset A of the sample, solve the equality-constrained
    least-norm system Gram(A) lam = 1, keep candidates that are dual
    feasible (lam >= 0) and primal feasible on the full sample, and return
    the best.  Any fully KKT-feasible candidate is the global optimum of the
    convex program, so this is an independent oracle for ``hard_svm``.
    """
    n = len(sample)
    if n == 0:
        raise ValueError("sample must be nonempty")
    if n > _ORACLE_MAX_POINTS or sample.dim > _ORACLE_MAX_DIM:
        raise SizeGuardError(
            f"enumeration oracle limited to {_ORACLE_MAX_POINTS} points and "
            f"dimension {_ORACLE_MAX_DIM}; got n={n}, d={sample.dim}"
        )
    signed = sample.labels[:, None] * sample.points
    best: SvmSolution | None = None
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            idx = list(subset)
            gram = signed[idx] @ signed[idx].T
            lam, *_ = np.linalg.lstsq(gram, np.ones(size), rcond=None)
            if np.max(np.abs(gram @ lam - 1.0)) > 1e-8:
                continue  # 1 not in the range of this Gram block
            if np.min(lam) < -1e-9:
                continue  # dual infeasible
            v = lam @ signed[idx]
            norm = float(np.linalg.norm(v))
            if norm < 1e-12:
                continue
            if np.min(signed @ v) < 1.0 - 1e-9:
                continue  # primal infeasible on the full sample
            direction = v / norm
            margin = float(np.min(signed @ direction))
            if best is None or margin > best.margin:
                alpha = np.zeros(n)
                alpha[idx] = np.maximum(lam, 0.0)
                best = SvmSolution(
                    direction=direction,
                    margin=margin,
                    dual_certificate=alpha,
                    iterations=0,
                )
    if best is None:
        raise InfeasibleSampleError("no strict linear separator for this sample")
    return best

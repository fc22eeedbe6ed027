"""Label propagation solves of ``(I - alpha S) F = Y``.

``solve_closed_form`` factors the dense system directly; ``solve_cg`` runs
conjugate gradient independently on each of the K right-hand sides (the
columns advance in lockstep, but every column keeps its own step sizes and
its own stopping test).
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .core import A2lpError, A2lpWarning, AlphaOutOfRange


class SingularSystem(A2lpError):
    pass


class NegativeScore(A2lpError):
    pass


class NotConverged(A2lpWarning):
    pass


class UniformRowWarning(A2lpWarning):
    pass


@dataclass
class SolverReport:
    method: str
    iterations: int
    residual: float
    wall_time: float
    converged: bool = True
    column_iterations: list[int] = field(default_factory=list)


def _check_system(S, Y: np.ndarray, alpha: float) -> np.ndarray:
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or S.shape != (Y.shape[0], Y.shape[0]):
        raise ValueError(f"S {S.shape} and Y {Y.shape} do not agree")
    return Y


def residual_norm(S, F: np.ndarray, Y: np.ndarray, alpha: float) -> float:
    """Frobenius norm of ``(I - alpha S) F - Y``."""
    return float(np.linalg.norm(F - alpha * (S @ F) - Y))


def solve_closed_form(S, Y: np.ndarray, alpha: float):
    """``F* = (I - alpha S)^{-1} Y`` via a dense Cholesky factorization."""
    Y = _check_system(S, Y, alpha)
    t0 = time.perf_counter()
    n = Y.shape[0]
    M = S.toarray() if sp.issparse(S) else np.array(S, dtype=np.float64)
    M *= -alpha
    M.flat[:: n + 1] += 1.0
    try:
        # M is symmetric, so M.T is the same matrix in Fortran order and LAPACK
        # can factor it in place instead of copying n^2 doubles.
        F = scipy.linalg.solve(M.T, Y, assume_a="pos", overwrite_a=True, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(f"I - alpha*S is not positive definite: {exc}") from exc
    del M
    res = residual_norm(S, F, Y, alpha)
    if res > 1e-8 * max(np.linalg.norm(Y), 1.0):
        raise SingularSystem(f"closed-form residual {res:.3e} too large; is S normalized?")
    _check_nonnegative(F)
    return F, SolverReport("closed_form", 0, res, time.perf_counter() - t0)


def solve_cg(S, Y: np.ndarray, alpha: float, tol: float = 1e-6, max_iter: int = 1000):
    """Conjugate gradient on each column until ``|r_j| <= tol * |y_j|``.

    If ``max_iter`` is reached the last iterate is returned, the report is
    flagged ``converged=False`` and a :class:`NotConverged` warning is issued.
    """
    Y = _check_system(S, Y, alpha)
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0 = time.perf_counter()
    n, K = Y.shape
    F = np.zeros_like(Y)
    R = Y.copy()
    P = R.copy()
    rs = np.einsum("ij,ij->j", R, R)
    target = (tol * np.sqrt(rs)) ** 2  # F starts at 0, so R = Y
    active = rs > target
    iters = np.zeros(K, dtype=int)
    for _ in range(max_iter):
        cols = np.flatnonzero(active)
        if cols.size == 0:
            break
        Pa = P[:, cols]
        APa = Pa - alpha * (S @ Pa)
        step = rs[cols] / np.einsum("ij,ij->j", Pa, APa)
        F[:, cols] += step * Pa
        Ra = R[:, cols] - step * APa
        R[:, cols] = Ra
        rs_new = np.einsum("ij,ij->j", Ra, Ra)
        P[:, cols] = Ra + (rs_new / rs[cols]) * Pa
        rs[cols] = rs_new
        iters[cols] += 1
        active[cols] = rs_new > target[cols]
    converged = not active.any()
    if not converged:
        warnings.warn(f"CG reached max_iter={max_iter} on {int(active.sum())} column(s)",
                      NotConverged, stacklevel=2)
    res = residual_norm(S, F, Y, alpha)
    return F, SolverReport("cg", int(iters.max(initial=0)), res, time.perf_counter() - t0,
                           converged, iters.tolist())


def solve(S, Y: np.ndarray, alpha: float, method: str = "cg", tol: float = 1e-6,
          max_iter: int = 1000):
    if method == "closed_form":
        return solve_closed_form(S, Y, alpha)
    if method == "cg":
        return solve_cg(S, Y, alpha, tol, max_iter)
    raise ValueError(f"unknown solver {method!r}")


def _check_nonnegative(F: np.ndarray) -> None:
    if F.size and F.min() < -1e-9 * max(1.0, float(np.abs(F).max())):
        raise NegativeScore(f"propagated scores must be non-negative, min={F.min():.3e}")


def to_probabilities(F: np.ndarray) -> np.ndarray:
    """Row-normalize non-negative scores; all-zero rows become uniform."""
    F = np.asarray(F, dtype=np.float64)
    if F.size and F.min() < -1e-9:
        raise NegativeScore(f"scores below -1e-9 cannot be normalized (min={F.min():.3e})")
    F = np.maximum(F, 0.0)
    sums = F.sum(axis=1, keepdims=True)
    empty = sums[:, 0] <= 0
    P = np.divide(F, sums, out=np.zeros_like(F), where=~empty[:, None])
    if empty.any():
        P[empty] = 1.0 / F.shape[1]
        warnings.warn(f"{int(empty.sum())} row(s) with zero score mass set to uniform",
                      UniformRowWarning, stacklevel=2)
    return P


def argmax_labels(P: np.ndarray) -> np.ndarray:
    """Per-row class with the largest value; ties go to the lowest class index."""
    return np.argmax(np.asarray(P), axis=1)

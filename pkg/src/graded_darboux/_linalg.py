"""Small dense linear algebra helpers: exact rational and float paths."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np


def exact_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank of a matrix of Fractions by Gaussian elimination."""
    m = [list(map(Fraction, r)) for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, nrows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = Fraction(1) / m[rank][col]
        m[rank] = [v * inv for v in m[rank]]
        for r in range(nrows):
            if r != rank and m[r][col] != 0:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
        if rank == nrows:
            break
    return rank


def exact_solve_membership(rows: Sequence[Sequence[Fraction]],
                           target: Sequence[Fraction]) -> Optional[List[Fraction]]:
    """Coefficients c with sum_j c_j rows[j] = target, or None if unsolvable."""
    k = len(rows)
    if k == 0:
        return [] if all(v == 0 for v in target) else None
    ncols = len(target)
    # solve rows^T c = target by elimination on the augmented (ncols x k+1)
    aug = [[Fraction(rows[j][i]) for j in range(k)] + [Fraction(target[i])]
           for i in range(ncols)]
    piv_cols: List[int] = []
    r = 0
    for c in range(k):
        piv = next((i for i in range(r, ncols) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = Fraction(1) / aug[r][c]
        aug[r] = [v * inv for v in aug[r]]
        for i in range(ncols):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    # inconsistent rows?
    for i in range(r, ncols):
        if aug[i][k] != 0:
            return None
    sol = [Fraction(0)] * k
    for row, c in enumerate(piv_cols):
        sol[c] = aug[row][k]
    return sol


def float_rank(mat: np.ndarray, tol: float = 1e-9) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, float(s[0]))))


def in_row_space(mat: np.ndarray, vec: np.ndarray, tol: float = 1e-9) -> Tuple[bool, float]:
    """Least-squares membership of ``vec`` in the row space of ``mat``."""
    if mat.size == 0:
        res = float(np.linalg.norm(vec))
        return res <= tol, res
    sol, *_ = np.linalg.lstsq(mat.T, vec, rcond=None)
    res = float(np.linalg.norm(mat.T @ sol - vec))
    scale = max(1.0, float(np.linalg.norm(vec)))
    return res <= tol * scale, res


def nullspace(mat: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the kernel (columns)."""
    if mat.size == 0:
        return np.eye(mat.shape[1] if mat.ndim == 2 else 0)
    u, s, vt = np.linalg.svd(mat)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > tol * max(1.0, smax)))
    return vt[rank:].T


def diagonalizable_real(mat: np.ndarray, tol: float = 1e-8) -> Tuple[bool, List[float]]:
    """Necessary-condition check: real spectrum and full eigenspaces."""
    n = mat.shape[0]
    if n == 0:
        return True, []
    eigvals = np.linalg.eigvals(mat)
    if np.any(np.abs(eigvals.imag) > tol * max(1.0, float(np.max(np.abs(eigvals))))):
        return False, [complex(v) for v in eigvals]
    vals = sorted(float(v.real) for v in eigvals)
    # cluster equal eigenvalues and compare algebraic vs geometric multiplicity
    clusters: List[List[float]] = []
    for v in vals:
        if clusters and abs(v - clusters[-1][-1]) <= tol * max(1.0, abs(v)):
            clusters[-1].append(v)
        else:
            clusters.append([v])
    for cl in clusters:
        lam = sum(cl) / len(cl)
        geo = nullspace(mat - lam * np.eye(n), tol=1e-7).shape[1]
        if geo < len(cl):
            return False, vals
    return True, vals

"""Symbolic linear algebra over the expression algebra.

Solves small left-linear systems  sum_a  R^a * M[a][b] = rhs[b]  with
expression entries by Gaussian elimination.  Pivots must be even (even
elements are central, so dividing by them is unambiguous); candidate pivots
that are not obviously nonzero are screened with randomized equality.
Solutions are verified by substituting back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .grexpr.chart import EVEN
from .grexpr.equality import DEFAULT_POLICY, EqualityPolicy, equal
from .grexpr.expr import GradedExpr, gdiv, gmul, one, zero


class SingularSystemError(RuntimeError):
    pass


def _pivot_quality(e: GradedExpr) -> Tuple[int, int]:
    """Lower is better: constants, then single monomials, then the rest."""
    if e.constant_value() is not None:
        return (0, 0)
    if len(e.terms) == 1 and not e.terms[0].atoms:
        return (1, 0)
    return (2, len(e.terms))


def _usable_pivot(e: GradedExpr, policy: EqualityPolicy) -> bool:
    if e.is_zero():
        return False
    if e.parity() not in (EVEN, None):
        return False
    if len(e.terms) == 1:
        return True
    # multi-term pivot: make sure it is not secretly zero
    return not equal(e, zero(e.chart), policy)


def solve_left_linear(M: Sequence[Sequence[GradedExpr]],
                      rhs: Sequence[GradedExpr],
                      policy: EqualityPolicy = DEFAULT_POLICY
                      ) -> Tuple[List[GradedExpr], bool]:
    """Solve ``sum_a R^a M[a][b] = rhs[b]`` for the R^a.

    Returns (solution, verified).  Unknowns absent from every equation are
    set to zero.  Raises SingularSystemError when no even nonzero pivot can
    be found for an unknown that appears, or when a leftover equation is
    inconsistent.
    """
    n = len(M)
    if n == 0:
        raise ValueError("empty system")
    m = len(rhs)
    chart = rhs[0].chart

    # equations as (coeff per unknown, rhs)
    eqs = [([M[a][b] for a in range(n)], rhs[b]) for b in range(m)]
    solved: List[Optional[int]] = []
    pivot_rows: List[Tuple[int, List[GradedExpr], GradedExpr]] = []
    remaining = set(range(n))
    active = list(range(m))

    while True:
        best = None
        for ei in active:
            coeffs, _ = eqs[ei]
            for a in remaining:
                c = coeffs[a]
                if c.is_zero():
                    continue
                q = _pivot_quality(c)
                if best is None or q < best[0]:
                    if _usable_pivot(c, policy):
                        best = (q, ei, a)
        if best is None:
            break
        _, ei, a = best
        coeffs, r = eqs[ei]
        piv = coeffs[a]
        norm_coeffs = [gdiv(c, piv) for c in coeffs]
        norm_rhs = gdiv(r, piv)
        pivot_rows.append((a, norm_coeffs, norm_rhs))
        remaining.discard(a)
        active.remove(ei)
        for ej in active:
            cj, rj = eqs[ej]
            f = cj[a]
            if f.is_zero():
                continue
            newc = [c2 - gmul(cn, f) for c2, cn in zip(cj, norm_coeffs)]
            newr = rj - gmul(norm_rhs, f)
            eqs[ej] = (newc, newr)

    # leftover equations must be trivial
    for ei in active:
        coeffs, r = eqs[ei]
        nontrivial = [c for c in coeffs if not c.is_zero()]
        if nontrivial or not r.is_zero():
            if all(equal(c, zero(chart), policy) for c in coeffs) \
                    and equal(r, zero(chart), policy):
                continue
            raise SingularSystemError("inconsistent or degenerate linear system")

    sol: List[GradedExpr] = [zero(chart) for _ in range(n)]
    for a, coeffs, r in reversed(pivot_rows):
        acc = r
        for a2 in range(n):
            if a2 != a and not coeffs[a2].is_zero():
                acc = acc - gmul(sol[a2], coeffs[a2])
        sol[a] = acc

    verified = True
    for b in range(m):
        lhs = zero(chart)
        for a in range(n):
            if not sol[a].is_zero() and not M[a][b].is_zero():
                lhs = lhs + gmul(sol[a], M[a][b])
        if not equal(lhs, rhs[b], policy):
            verified = False
            break
    return sol, verified


# -- exact determinants and Cramer membership (polynomial, all-even data) -----


def laplace_det(rows: List[List[GradedExpr]]) -> GradedExpr:
    k = len(rows)
    chart = rows[0][0].chart
    if k == 1:
        return rows[0][0]
    out = zero(chart)
    for j in range(k):
        if rows[0][j].is_zero():
            continue
        minor = [[rows[r][c] for c in range(k) if c != j] for r in range(1, k)]
        term = gmul(rows[0][j], laplace_det(minor))
        out = out + term if j % 2 == 0 else out - term
    return out


def cramer_membership(D, Y) -> Optional[List[bool]]:
    """Exact span membership for all-even polynomial data.

    Returns [True] when membership is certified over the fraction field,
    [] when it fails exactly, None when no invertible submatrix exists.
    """
    from .homogeneity import body_vector, _sample_body_points
    import itertools

    gens = D.generators
    k = len(gens)
    chart = D.chart
    n = chart.dim

    # pick the column subset with the largest body determinant at a sample
    pts = _sample_body_points(chart, 3, seed=7)
    best: Tuple[float, Optional[Tuple[int, ...]]] = (0.0, None)
    for cols in itertools.combinations(range(n), k):
        score = 0.0
        for p in pts:
            G = np.array([[float(body_vector(g, p)[c]) for c in cols]
                          for g in gens])
            score = max(score, abs(float(np.linalg.det(G))))
        if score > best[0]:
            best = (score, cols)
    if best[1] is None or best[0] < 1e-12:
        return None
    cols = best[1]

    sub = [[gens[j].coefficients[c] for c in cols] for j in range(k)]
    rho = laplace_det(sub)
    if rho.is_zero():
        return None
    y_sub = [Y.coefficients[c] for c in cols]

    # Cramer numerators: det of sub with row j replaced by y_sub
    nums = []
    for j in range(k):
        mod = [y_sub if r == j else sub[r] for r in range(k)]
        nums.append(laplace_det([list(row) for row in mod]))

    # residual check, cleared of denominators:
    #   rho * Y_c - sum_j nums_j * X_{j,c} = 0 for every coordinate c
    for c in range(n):
        acc = gmul(rho, Y.coefficients[c])
        for j in range(k):
            acc = acc - gmul(nums[j], gens[j].coefficients[c])
        if not acc.is_zero():
            return []
    return [True]

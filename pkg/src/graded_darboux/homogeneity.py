"""Weight vector fields, homogeneity degrees, lifts, and graded distributions."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from . import _linalg
from .cartan import VectorField, lie_bracket, lie_derivative
from .grexpr.chart import ChartError, ChartSpec, CoordinateDecl, EVEN
from .grexpr.equality import DEFAULT_POLICY, EqualityPolicy, equal
from .grexpr.expr import GradedExpr, coord, zero
from .grexpr.grassmann import EvaluationError, eval_body_exact, eval_numeric


@dataclass(frozen=True)
class WeightVectorField:
    """An even vector field defining homogeneity; canonical when its
    coefficients read weight(x) * x in the ambient chart."""

    field: VectorField
    canonical: bool = False

    def __post_init__(self):
        if self.field.parity != EVEN:
            raise ValueError("weight vector fields are even")

    @property
    def chart(self) -> ChartSpec:
        return self.field.chart


@dataclass
class Degree:
    parity: Optional[int]
    weight: Union[Fraction, float, None]

    def as_tuple(self):
        return (self.parity, self.weight)


@dataclass
class DegreeReport:
    homogeneous: bool
    degree: Optional[Degree]
    residual: object = None   # GradedExpr or VectorField
    note: str = ""

    def __bool__(self):
        return self.homogeneous


class RankCollapseError(RuntimeError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class Distribution:
    """Freely generated distribution: independent generators, declared rank."""

    chart: ChartSpec
    generators: Tuple[VectorField, ...]
    rank: int = None

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if self.rank is None:
            object.__setattr__(self, "rank", len(gens))
        if self.rank != len(gens):
            raise ValueError("declared rank must match the generator count")
        for g in gens:
            if g.chart != self.chart:
                raise ChartError("generator lives on the wrong chart")


# -- weight fields ------------------------------------------------------------


def weight_field_of_chart(chart: ChartSpec) -> WeightVectorField:
    """The canonical field sum_i weight(x^i) * x^i d/dx^i of a chart."""
    coeffs = []
    for c in chart.coords:
        if c.weight == 0:
            coeffs.append(zero(chart))
        else:
            coeffs.append(coord(chart, c.name) * c.weight)
    return WeightVectorField(VectorField(chart, EVEN, tuple(coeffs)), canonical=True)


def verify_weight_chart(nabla: VectorField, chart: ChartSpec) -> bool:
    """True iff the coefficient of every x^i is exactly weight(x^i) * x^i."""
    if nabla.chart != chart or nabla.parity != EVEN:
        return False
    want = weight_field_of_chart(chart).field
    return all(a == b for a, b in zip(nabla.coefficients, want.coefficients))


@dataclass
class LinearizationReport:
    vanishes: bool
    verdict: str
    matrix_even: Optional[np.ndarray] = None
    matrix_odd: Optional[np.ndarray] = None
    eigenvalues_even: Optional[list] = None
    eigenvalues_odd: Optional[list] = None
    diagonalizable: Optional[bool] = None


def _body_value(e: GradedExpr, point: Dict[str, object]) -> float:
    try:
        return float(eval_body_exact(e, point))
    except EvaluationError:
        full = dict(point)
        for i in e.chart.odd_indices:
            full.setdefault(e.chart.coords[i].name, 0.0)
        return eval_numeric(e, full).body


def linearization_at_zero(nabla: VectorField, point: Dict[str, object],
                          tol: float = 1e-12) -> LinearizationReport:
    """Differential of an even field at a body zero, block-split by parity.

    At a zero the Jacobian of the coefficients is well defined; real
    diagonalizability of both blocks is a necessary condition for the field
    to define homogeneous coordinates around the point.  If the field does
    not vanish at the point, no linearization is needed: nonvanishing even
    fields always define homogeneity structures.
    """
    if nabla.parity != EVEN:
        raise ValueError("linearization expects an even field")
    chart = nabla.chart
    vals = [_body_value(c, point) for c in nabla.coefficients]
    if any(abs(v) > tol for v in vals):
        return LinearizationReport(
            vanishes=False,
            verdict="nonvanishing at the point: weight vector field")

    from .grexpr.expr import partial
    n = chart.dim
    jac = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            jac[i, j] = _body_value(partial(nabla.coefficients[i],
                                            chart.coords[j].name), point)
    ev = list(chart.even_indices)
    od = list(chart.odd_indices)
    jac_e = jac[np.ix_(ev, ev)]
    jac_o = jac[np.ix_(od, od)]
    ok_e, eig_e = _linalg.diagonalizable_real(jac_e)
    ok_o, eig_o = _linalg.diagonalizable_real(jac_o)
    ok = ok_e and ok_o
    verdict = ("linearization diagonalizable over R (necessary condition holds)"
               if ok else "linearization not real-diagonalizable: "
                          "not a weight vector field")
    return LinearizationReport(True, verdict, jac_e, jac_o, eig_e, eig_o, ok)


# -- degrees ------------------------------------------------------------------


def _match_ratio(pairs, is_exact: bool, tol: float = 1e-9):
    """Shared ratio c_L/c_T across aligned coefficient pairs, or None."""
    w = None
    for c_t, c_l in pairs:
        if c_t == 0:
            if (c_l == 0) if is_exact else (abs(c_l) <= tol):
                continue
            return None
        r = c_l / c_t if is_exact else float(c_l) / float(c_t)
        if w is None:
            w = r
        else:
            if is_exact:
                if r != w:
                    return None
            elif abs(r - w) > tol * max(1.0, abs(w)):
                return None
    return Fraction(0) if w is None else w


def degree_of(T, nabla: WeightVectorField,
              policy: EqualityPolicy = DEFAULT_POLICY) -> DegreeReport:
    """Homogeneity degree via coefficient matching of L_nabla T against w*T."""
    nf = nabla.field if isinstance(nabla, WeightVectorField) else nabla

    if isinstance(T, VectorField):
        L = lie_bracket(nf, T)
        keys_T: Dict[tuple, object] = {}
        keys_L: Dict[tuple, object] = {}
        for idx, (ct, cl) in enumerate(zip(T.coefficients, L.coefficients)):
            for m in ct.terms:
                keys_T[(idx, m.key())] = m.coeff
            for m in cl.terms:
                keys_L[(idx, m.key())] = m.coeff
        if not keys_T:
            return DegreeReport(True, None, L, "zero field: any degree")
        if set(keys_L) - set(keys_T):
            return DegreeReport(False, None, L,
                                "derivative has monomials outside the input")
        exact = all(isinstance(c, Fraction) for c in
                    list(keys_T.values()) + list(keys_L.values()))
        pairs = [(keys_T[k], keys_L.get(k, 0)) for k in keys_T]
        w = _match_ratio(pairs, exact)
        if w is None:
            return DegreeReport(False, None, L, "no consistent weight")
        residual = VectorField(T.chart, T.parity,
                               tuple(cl - cw * w for cl, cw in
                                     zip(L.coefficients, T.coefficients)))
        ok = all(equal(c, zero(T.chart), policy) for c in residual.coefficients)
        deg = Degree(T.parity, w) if ok else None
        return DegreeReport(ok, deg, residual)

    if T.is_zero():
        return DegreeReport(True, None, T, "zero expression: any degree")
    parity = T.parity()
    if parity is None:
        return DegreeReport(False, None, T, "mixed parity")
    L = lie_derivative(nf, T)
    dT = {m.key(): m.coeff for m in T.terms}
    dL = {m.key(): m.coeff for m in L.terms}
    if set(dL) - set(dT):
        return DegreeReport(False, None, L,
                            "derivative has monomials outside the input")
    exact = all(isinstance(c, Fraction) for c in
                list(dT.values()) + list(dL.values()))
    w = _match_ratio([(dT[k], dL.get(k, 0)) for k in dT], exact)
    if w is None:
        return DegreeReport(False, None, L, "no consistent weight")
    residual = L - T * w
    ok = bool(equal(residual, zero(T.chart), policy))
    return DegreeReport(ok, Degree(parity, w) if ok else None, residual)


# -- lifts --------------------------------------------------------------------


def _lifted_chart(chart: ChartSpec, prefix: str, suffix: str,
                  weight_sign: int) -> ChartSpec:
    decls = list(chart.coords)
    for c in chart.coords:
        name = f"{prefix}{c.name}{suffix}"
        if name in chart.names:
            raise ChartError(f"lifted coordinate name {name!r} collides")
        decls.append(CoordinateDecl(name, c.parity, c.weight * weight_sign,
                                    box=c.box))
    return ChartSpec(tuple(decls), default_box=chart.default_box)


def tangent_lift(nabla: WeightVectorField,
                 chart: Optional[ChartSpec] = None) -> WeightVectorField:
    """Adapted chart (x, x_dot) with the lifted field sum w (x dx + xd dxd)."""
    if not nabla.canonical:
        raise ValueError("tangent lift expects the canonical weight field")
    base = chart or nabla.chart
    lifted = _lifted_chart(base, "", "_dot", +1)
    return weight_field_of_chart(lifted)


def cotangent_lift(nabla: WeightVectorField,
                   chart: Optional[ChartSpec] = None) -> WeightVectorField:
    """Adapted chart (x, p_x); momenta carry the opposite weight."""
    if not nabla.canonical:
        raise ValueError("cotangent lift expects the canonical weight field")
    base = chart or nabla.chart
    lifted = _lifted_chart(base, "p_", "", -1)
    return weight_field_of_chart(lifted)


# -- distributions ------------------------------------------------------------


def _sample_body_points(chart: ChartSpec, n_points: int, seed: int,
                        denominator: int = 64) -> List[Dict[str, Fraction]]:
    """Dyadic-rational body points inside the chart boxes (exactly float-
    representable, so the exact and float paths see the same points)."""
    rng = random.Random(seed)
    pts = []
    for _ in range(n_points):
        p: Dict[str, Fraction] = {}
        for i in chart.even_indices:
            lo, hi = chart.box_for(i)
            t = Fraction(rng.randint(0, denominator), denominator)
            p[chart.coords[i].name] = (Fraction(lo)
                                       + (Fraction(hi) - Fraction(lo)) * t)
        pts.append(p)
    return pts


def body_vector(X: VectorField, point: Dict[str, object]) -> np.ndarray:
    return np.array([_body_value(c, point) for c in X.coefficients])


def _span_contains(D: Distribution, Y: VectorField, n_points: int,
                   seed: int, tol: float = 1e-9) -> Tuple[bool, Optional[dict]]:
    """Pointwise span membership at sampled body points, with an exact
    symbolic path when every entry is even and polynomial."""
    chart = D.chart
    exact_ok = (chart.is_purely_even()
                and all(g.parity == EVEN for g in D.generators)
                and Y.parity == EVEN
                and all(c.is_polynomial() and c.is_exact()
                        for g in D.generators for c in g.coefficients)
                and all(c.is_polynomial() and c.is_exact() for c in Y.coefficients))

    pts = _sample_body_points(chart, n_points, seed)
    for p in pts:
        G = np.array([body_vector(g, p) for g in D.generators])
        r = _linalg.float_rank(G)
        if r < D.rank:
            raise RankCollapseError(
                f"generators drop to rank {r} at a sample point",
                witness={k: float(v) for k, v in p.items()})
        yv = body_vector(Y, p)
        ok, res = _linalg.in_row_space(G, yv, tol)
        if not ok:
            return False, {"point": {k: float(v) for k, v in p.items()},
                           "residual": res}

    if exact_ok:
        sol = _symbolic_membership(D, Y)
        if sol is not None and not sol:
            return False, {"mode": "exact", "residual": "nonzero"}
    return True, None


def _symbolic_membership(D: Distribution, Y: VectorField) -> Optional[List[bool]]:
    """Exact span membership over the fraction field for polynomial data.

    Returns [] when membership fails exactly, [True] when certified, None
    when the exact path cannot decide (no usable submatrix).
    """
    from .symsolve import cramer_membership
    return cramer_membership(D, Y)


def distribution_homogeneous(D: Distribution, nabla: WeightVectorField,
                             n_points: int = 16, seed: int = 0) -> bool:
    """Whether L_nabla of every generator stays inside the span."""
    nf = nabla.field if isinstance(nabla, WeightVectorField) else nabla
    for g in D.generators:
        cand = lie_bracket(nf, g)
        ok, _w = _span_contains(D, cand, n_points, seed)
        if not ok:
            return False
    return True


def involutive_check(D: Distribution, n_points: int = 16, seed: int = 0) -> bool:
    """All pairwise graded brackets stay inside the span ([X,X] included
    for odd generators)."""
    gens = D.generators
    for i, gi in enumerate(gens):
        for j in range(i, len(gens)):
            if i == j and gi.parity == EVEN:
                continue
            br = lie_bracket(gi, gens[j])
            if br.is_zero():
                continue
            ok, _w = _span_contains(D, br, n_points, seed)
            if not ok:
                return False
    return True

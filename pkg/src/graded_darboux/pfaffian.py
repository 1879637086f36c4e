"""Characteristic distribution, class of a Pfaffian form, Reeb and Liouville
fields, and the purely-even wedge-power class oracle.

Rank decisions happen at body points (odd coordinates set to zero), where
the coefficient matrix of a 2-form splits into an even-even and an odd-odd
block.  The class of a regular one-form alpha is the corank of
ker(alpha) /\\ ker(d alpha); it equals rank(flat) + 1 when alpha stays off
the image of flat (transversal case) and rank(flat) when it is contained.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _linalg
from .cartan import VectorField, basis_field, exterior_d, interior
from .grexpr.chart import EVEN
from .grexpr.equality import DEFAULT_POLICY, EqualityPolicy, equal
from .grexpr.expr import GradedExpr, gmul, one, zero
from .grexpr.grassmann import EvaluationError, eval_body_exact
from .homogeneity import _sample_body_points, _body_value
from .symsolve import SingularSystemError, solve_left_linear


class PfaffianError(ValueError):
    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NotClosedError(PfaffianError):
    pass


# -- the flat map at a point ---------------------------------------------------


@dataclass
class FlatMatrix:
    """Coefficient matrix of v -> i_v beta at a body point.

    ``matrix[a][b]`` is the d(x^b)-coefficient of i_{d/dx^a} beta evaluated
    at the point; for one-forms the extra ``alpha_row`` holds the form itself.
    """

    point: Dict[str, float]
    matrix: np.ndarray
    even_indices: Tuple[int, ...]
    odd_indices: Tuple[int, ...]
    alpha_row: Optional[np.ndarray] = None
    exact_matrix: Optional[list] = None
    exact_alpha: Optional[list] = None

    @property
    def even_block(self) -> np.ndarray:
        ix = list(self.even_indices)
        return self.matrix[np.ix_(ix, ix)]

    @property
    def odd_block(self) -> np.ndarray:
        ix = list(self.odd_indices)
        return self.matrix[np.ix_(ix, ix)]

    def rank(self, tol: float = 1e-9) -> int:
        if self.exact_matrix is not None:
            return _linalg.exact_rank(self.exact_matrix)
        return _linalg.float_rank(self.matrix, tol)


def _interior_rows(beta: GradedExpr) -> List[List[GradedExpr]]:
    chart = beta.chart
    rows = []
    for a in range(chart.dim):
        ia = interior(basis_field(chart, chart.coords[a].name), beta) \
            if not beta.is_zero() else zero(chart)
        rows.append([ia.coefficient_of_diff(name) for name in chart.names])
    return rows


def flat_matrix(form: GradedExpr, point: Dict[str, object],
                two_form: Optional[GradedExpr] = None) -> FlatMatrix:
    """Flat matrix at a body point: of d(form) for 1-forms (with the form
    appended as an extra row), of the form itself for 2-forms."""
    chart = form.chart
    deg = form.form_degree()
    if deg == 1:
        beta = two_form if two_form is not None else exterior_d(form)
        alpha = form
    elif deg == 2:
        beta = form
        alpha = None
    else:
        raise PfaffianError("flat_matrix expects a 1-form or a 2-form")

    rows = _interior_rows(beta)
    n = chart.dim
    mat = np.zeros((n, n))
    exact: Optional[list] = []
    for a in range(n):
        for b in range(n):
            e = rows[a][b]
            mat[a, b] = _body_value(e, point)
            if exact is not None:
                try:
                    pass_exact = eval_body_exact(e, point)
                except EvaluationError:
                    exact = None
                else:
                    if len(exact) <= a:
                        exact.append([])
                    exact[a].append(pass_exact)

    arow = None
    ea: Optional[list] = []
    if alpha is not None:
        arow = np.zeros(n)
        for b, name in enumerate(chart.names):
            e = alpha.coefficient_of_diff(name)
            arow[b] = _body_value(e, point)
            if ea is not None:
                try:
                    ea.append(eval_body_exact(e, point))
                except EvaluationError:
                    ea = None
    return FlatMatrix(
        point={k: float(v) for k, v in point.items()},
        matrix=mat,
        even_indices=chart.even_indices,
        odd_indices=chart.odd_indices,
        alpha_row=arow,
        exact_matrix=exact,
        exact_alpha=ea if alpha is not None else None,
    )


# -- classification -------------------------------------------------------------


@dataclass
class ClassificationReport:
    class_: Optional[int]
    case: str        # closed | transversal | contained | irregular
    kind: str        # closed | contact | symplectic-potential | precontact
    #                  | presymplectic-potential | irregular
    evidence: List[dict] = field(default_factory=list)

    def __bool__(self):
        return self.kind != "irregular"


def characteristic_class(alpha: GradedExpr,
                         points: Optional[Sequence[Dict[str, object]]] = None,
                         n_points: int = 16, seed: int = 0,
                         tol: float = 1e-9,
                         policy: EqualityPolicy = DEFAULT_POLICY
                         ) -> ClassificationReport:
    """Class and kind of a nowhere-vanishing one-form at sampled body points."""
    chart = alpha.chart
    if alpha.form_degree() != 1:
        raise PfaffianError("classification expects a one-form")
    if alpha.parity() is None:
        raise PfaffianError("classification expects a form of definite parity")
    if points is None:
        points = _sample_body_points(chart, n_points, seed)

    dalpha = exterior_d(alpha)
    if equal(dalpha, zero(chart), policy):
        evidence = []
        for p in points:
            fm = flat_matrix(alpha, p, two_form=dalpha)
            if float(np.linalg.norm(fm.alpha_row)) <= tol:
                raise PfaffianError("form vanishes at a sample point",
                                    witness=fm.point)
            evidence.append({"point": fm.point, "rank": 0, "case": "closed"})
        return ClassificationReport(1, "closed", "closed", evidence)

    evidence = []
    outcomes = set()
    for p in points:
        fm = flat_matrix(alpha, p, two_form=dalpha)
        if float(np.linalg.norm(fm.alpha_row)) <= tol:
            raise PfaffianError("form vanishes at a sample point",
                                witness=fm.point)
        r = fm.rank(tol)
        if fm.exact_matrix is not None and fm.exact_alpha is not None:
            contained = _linalg.exact_solve_membership(
                fm.exact_matrix, fm.exact_alpha) is not None
            residual = 0.0 if contained else None
        else:
            contained, residual = _linalg.in_row_space(fm.matrix, fm.alpha_row, tol)
        cls = r if contained else r + 1
        outcomes.add((r, contained))
        evidence.append({"point": fm.point, "rank": r,
                         "case": "contained" if contained else "transversal",
                         "class": cls, "residual": residual})

    if len(outcomes) != 1:
        return ClassificationReport(None, "irregular", "irregular", evidence)
    r, contained = outcomes.pop()
    cls = r if contained else r + 1
    dim = chart.dim
    if contained:
        kind = "symplectic-potential" if cls == dim else "presymplectic-potential"
        case = "contained"
    else:
        kind = "contact" if cls == dim else "precontact"
        case = "transversal"
    return ClassificationReport(cls, case, kind, evidence)


@dataclass
class PresymplecticReport:
    closed: bool
    constant_rank: bool
    rank: Optional[int]
    even_rank: Optional[int]
    odd_rank: Optional[int]
    kernel: Optional[np.ndarray]
    evidence: List[dict] = field(default_factory=list)

    def __bool__(self):
        return self.closed and self.constant_rank


def presymplectic_check(omega: GradedExpr,
                        points: Optional[Sequence[Dict[str, object]]] = None,
                        n_points: int = 16, seed: int = 0,
                        tol: float = 1e-9,
                        policy: EqualityPolicy = DEFAULT_POLICY
                        ) -> PresymplecticReport:
    """Closedness plus constant-rank verdict for a 2-form of definite parity."""
    chart = omega.chart
    if omega.form_degree() != 2:
        raise PfaffianError("expected a two-form")
    par = omega.parity()
    if par is None:
        raise PfaffianError("expected a form of definite parity")
    domega = exterior_d(omega)
    if not equal(domega, zero(chart), policy):
        raise NotClosedError("form is not closed", witness=str(domega))
    if points is None:
        points = _sample_body_points(chart, n_points, seed)

    evidence = []
    ranks = set()
    kernel = None
    for p in points:
        fm = flat_matrix(omega, p)
        r = fm.rank(tol)
        entry = {"point": fm.point, "rank": r}
        if par == EVEN:
            entry["even_rank"] = _linalg.float_rank(fm.even_block, tol)
            entry["odd_rank"] = _linalg.float_rank(fm.odd_block, tol)
        ranks.add((r, entry.get("even_rank"), entry.get("odd_rank")))
        evidence.append(entry)
        if kernel is None:
            kernel = _linalg.nullspace(fm.matrix, tol)
    constant = len(ranks) == 1
    if constant:
        r, er, orank = ranks.pop()
    else:
        r = er = orank = None
    return PresymplecticReport(True, constant, r, er, orank, kernel, evidence)


# -- Reeb and Liouville fields ---------------------------------------------------


@dataclass
class ReebField:
    field: VectorField
    unit_pairing: bool      # i_R alpha = 1
    in_kernel: bool         # i_R d(alpha) = 0

    def __bool__(self):
        return self.unit_pairing and self.in_kernel


def _assemble_contraction_system(beta: GradedExpr):
    """Rows M[a][b]: d(x^b)-coefficient of i_{d/dx^a} beta (left-linear)."""
    return _interior_rows(beta)


def reeb(alpha: GradedExpr,
         policy: EqualityPolicy = DEFAULT_POLICY) -> ReebField:
    """The unique field with i_R alpha = 1 and i_R d(alpha) = 0."""
    chart = alpha.chart
    if alpha.form_degree() != 1:
        raise PfaffianError("Reeb field of a one-form only")
    dalpha = exterior_d(alpha)
    K = _assemble_contraction_system(dalpha)
    A = [interior(basis_field(chart, name), alpha) for name in chart.names]

    n = chart.dim
    M = [[K[a][b] for b in range(n)] + [A[a]] for a in range(n)]
    rhs = [zero(chart) for _ in range(n)] + [one(chart)]
    try:
        sol, verified = solve_left_linear(M, rhs, policy)
    except SingularSystemError as exc:
        raise PfaffianError(f"no Reeb field: {exc}") from exc

    par = alpha.parity()
    R = VectorField(chart, par if par is not None else EVEN, tuple(sol))
    pair_ok = bool(equal(interior(R, alpha), one(chart), policy))
    kern_ok = bool(equal(interior(R, dalpha), zero(chart), policy)) \
        if not dalpha.is_zero() else True
    if not (pair_ok and kern_ok and verified):
        raise PfaffianError("Reeb system solved but verification failed")
    return ReebField(R, pair_ok, kern_ok)


def liouville(omega: GradedExpr, alpha: GradedExpr,
              policy: EqualityPolicy = DEFAULT_POLICY) -> VectorField:
    """Solve i_X omega = alpha for the field X (omega symplectic)."""
    chart = omega.chart
    if omega.form_degree() != 2 or alpha.form_degree() != 1:
        raise PfaffianError("liouville expects a two-form and a one-form")
    if not equal(exterior_d(alpha), omega, policy):
        raise PfaffianError("one-form is not a potential of the two-form")
    for p in _sample_body_points(chart, 3, seed=policy.seed):
        fm = flat_matrix(omega, p)
        if fm.rank() < chart.dim:
            raise PfaffianError("degenerate two-form: flat map is singular",
                                witness=fm.point)
    W = _assemble_contraction_system(omega)
    rhs = [alpha.coefficient_of_diff(name) for name in chart.names]
    try:
        sol, verified = solve_left_linear(W, rhs, policy)
    except SingularSystemError as exc:
        raise PfaffianError(f"degenerate two-form: {exc}") from exc
    sa, so = alpha.parity(), omega.parity()
    par = ((sa or 0) + (so or 0)) % 2
    X = VectorField(chart, par, tuple(sol))
    if not verified or not equal(interior(X, omega), alpha, policy):
        raise PfaffianError("liouville system solved but verification failed")
    return X


# -- wedge-power class oracle (purely even charts) --------------------------------


def _form_nonzero_at(w: GradedExpr, point: Dict[str, object],
                     tol: float = 1e-9) -> bool:
    for pat, coeff in w.diff_components().items():
        if abs(_body_value(coeff, point)) > tol:
            return True
    return False


def darboux_class_oracle(alpha: GradedExpr, point: Dict[str, object],
                         tol: float = 1e-9) -> int:
    """Class by wedge powers: the largest s with alpha /\\ (d alpha)^s != 0
    at the point decides 2s+1 or 2s+2.  Undefined on super charts, where top
    powers of odd differentials never vanish."""
    chart = alpha.chart
    if not chart.is_purely_even():
        raise PfaffianError("wedge-power class oracle needs a purely even chart")
    if alpha.form_degree() != 1:
        raise PfaffianError("class oracle expects a one-form")
    if not _form_nonzero_at(alpha, point, tol):
        raise PfaffianError("form vanishes at the point", witness=point)

    dalpha = exterior_d(alpha)
    powers = [one(chart)]
    while True:
        nxt = gmul(powers[-1], dalpha)
        powers.append(nxt)
        if nxt.is_zero() or 2 * len(powers) > chart.dim + 2:
            break

    s_max = 0
    s = 0
    while True:
        if s + 1 >= len(powers):
            break
        w = gmul(alpha, powers[s + 1])
        if w.is_zero() or not _form_nonzero_at(w, point, tol):
            break
        s += 1
    s_max = s

    next_power = powers[s_max + 1] if s_max + 1 < len(powers) else zero(chart)
    if next_power.is_zero() or not _form_nonzero_at(next_power, point, tol):
        return 2 * s_max + 1
    return 2 * s_max + 2

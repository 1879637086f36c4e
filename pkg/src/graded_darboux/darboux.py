"""Construction and verification of homogeneous normal forms.

Constructive pieces: the weight-compatible solution of df/dy = g by
definite integration, a radial homotopy primitive for closed polynomial
forms, the logarithmic primitive for closed weight-zero one-forms near a
point where the weight field does not vanish, linear normal forms of
constant even two-forms by congruence, assembly of one-form normal forms on
top of a chart that canonicalizes the differential, and numeric
straightening of commuting even vector fields by composed flows.  Every
construction ends in a certificate-style verification.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _linalg
from .cartan import (ChartMap, VectorField, exterior_d, interior,
                     lie_bracket, pullback)
from .grexpr.chart import (ChartError, ChartSpec, CoordinateDecl, EVEN, ODD)
from .grexpr.equality import DEFAULT_POLICY, EqualityPolicy, equal
from .grexpr.expr import (GradedExpr, Monomial, apply_func, const, coord,
                          diff, gdiv, gmul, one, partial, substitute, zero)
from .grexpr.integrate import NonIntegrable, integrate_univariate
from .homogeneity import (WeightVectorField, degree_of,
                          weight_field_of_chart, _body_value)
from .pfaffian import PfaffianError, characteristic_class, flat_matrix


# -- normal form descriptors -----------------------------------------------------


@dataclass(frozen=True)
class NormalFormSpec:
    """Shape of a canonical form: variant, pair count r, odd count s, signs."""

    variant: str                  # contact | contact-log | potential | presymplectic
    r: int
    s: int = 0
    eps: Tuple[int, ...] = ()
    residual: int = 0             # leftover coordinates not in the normal form

    def __post_init__(self):
        if self.variant not in ("contact", "contact-log", "potential",
                                "presymplectic"):
            raise ValueError(f"unknown variant {self.variant!r}")
        eps = tuple(int(e) for e in self.eps)
        if len(eps) != self.s or any(e not in (1, -1) for e in eps):
            raise ValueError("eps must hold s entries of +/-1")
        if tuple(sorted(eps, reverse=True)) != eps:
            raise ValueError("eps must list +1 entries before -1 entries")
        object.__setattr__(self, "eps", eps)

    def coordinate_roles(self, chart: ChartSpec) -> Dict[str, List[str]]:
        """Positional naming convention on the normal-form chart:
        (q_1..q_r, p_1..p_r, [z,] y_1..y_s, rest)."""
        names = list(chart.names)
        need = 2 * self.r + self.s + (1 if self.variant.startswith("contact") else 0)
        if len(names) < need:
            raise ChartError("normal-form chart has too few coordinates")
        roles = {"q": names[:self.r], "p": names[self.r:2 * self.r]}
        at = 2 * self.r
        if self.variant.startswith("contact"):
            roles["z"] = [names[at]]
            at += 1
        roles["y"] = names[at:at + self.s]
        roles["rest"] = names[at + self.s:]
        return roles


def canonical_expr(spec: NormalFormSpec, chart: ChartSpec) -> GradedExpr:
    """The canonical form of the given shape over a normal-form chart."""
    roles = spec.coordinate_roles(chart)
    out = zero(chart)
    if spec.variant == "contact":
        out = out + diff(chart, roles["z"][0])
    elif spec.variant == "contact-log":
        zc = roles["z"][0]
        out = out + gdiv(diff(chart, zc), coord(chart, zc))
    for qn, pn in zip(roles["q"], roles["p"]):
        if spec.variant == "presymplectic":
            out = out + gmul(diff(chart, pn), diff(chart, qn))
        else:
            out = out + gmul(coord(chart, pn), diff(chart, qn))
    for yn, e in zip(roles["y"], spec.eps):
        if chart.parity(chart.index(yn)) != ODD:
            raise ChartError(f"coordinate {yn!r} must be odd")
        if spec.variant == "presymplectic":
            out = out + gmul(diff(chart, yn), diff(chart, yn)) * e
        else:
            out = out + gmul(coord(chart, yn), diff(chart, yn)) * e
    return out


@dataclass
class CheckEntry:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    passed: bool
    entries: List[CheckEntry]
    mode: str = "exact"

    def __bool__(self):
        return self.passed


@dataclass
class DarbouxResult:
    status: str                       # ok | verification-only | not-guaranteed
    chart_map: Optional[ChartMap] = None
    spec: Optional[NormalFormSpec] = None
    verification: Optional[VerificationReport] = None
    new_weights: Dict[str, object] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.status == "ok" and bool(self.verification)


# -- the homogeneous ODE step ------------------------------------------------------


def homog_solve_pde(g: GradedExpr, y1: str,
                    nabla: Optional[WeightVectorField] = None) -> GradedExpr:
    """Solve df/dy1 = g by f = integral of g from 0 to y1.

    For homogeneous g of weight w the solution has weight w + weight(y1) and
    vanishes wherever the integration segment collapses (in particular at the
    chart origin).  Non-homogeneous inputs are integrated anyway, with a
    warning: the weight law no longer applies.
    """
    chart = g.chart
    nabla = nabla or weight_field_of_chart(chart)
    rep = degree_of(g, nabla)
    if not rep.homogeneous:
        warnings.warn("integrand is not homogeneous: the weight claim "
                      "for the solution is dropped", stacklevel=2)
    return integrate_univariate(g, y1, 0, coord(chart, y1))


# -- radial homotopy primitive ------------------------------------------------------


def _euler_field(chart: ChartSpec) -> VectorField:
    return VectorField(chart, EVEN,
                       tuple(coord(chart, c.name) for c in chart.coords))


def homotopy(w: GradedExpr) -> GradedExpr:
    """Radial homotopy operator K on polynomial forms: d K + K d = id.

    Monomial-wise K(m) = i_E(m) / (poly degree + form degree) with E the
    standard Euler field of the chart.
    """
    if not w.is_polynomial():
        raise NonIntegrable("homotopy operator needs a polynomial form")
    chart = w.chart
    E = _euler_field(chart)
    out = zero(chart)
    for m in w.terms:
        p = m.form_degree()
        if p == 0:
            continue
        k = sum(m.cexp)
        piece = interior(E, GradedExpr(chart, (m,)))
        out = out + piece * Fraction(1, k + p)
    return out


def poincare_primitive(w: GradedExpr, nabla: Optional[WeightVectorField] = None,
                       center: Optional[Dict[str, object]] = None,
                       policy: EqualityPolicy = DEFAULT_POLICY) -> GradedExpr:
    """Primitive of a closed polynomial form that preserves homogeneity.

    The radial scaling commutes with every diagonal linear flow, so the
    primitive of a homogeneous form is homogeneous of the same degree, and
    it vanishes at the center.  The center must be a zero of the weight
    field: nonzero entries are allowed exactly in even weight-zero
    coordinates (the homotopy is run in translated coordinates).
    """
    chart = w.chart
    nabla = nabla or weight_field_of_chart(chart)
    if not nabla.canonical:
        raise ValueError("expected the canonical weight field of the chart")
    deg = w.form_degree()
    if deg is None or deg < 1:
        raise ValueError("expected a form of definite degree >= 1")
    if not w.is_polynomial():
        raise NonIntegrable("transcendental input: no polynomial primitive")
    if not exterior_d(w).is_zero():
        raise PfaffianError("form is not closed",
                            witness=str(exterior_d(w)))

    shift: Dict[str, object] = {}
    if center:
        for name, v in center.items():
            i = chart.index(name)
            val = Fraction(v) if not isinstance(v, float) else v
            if val == 0:
                continue
            if chart.parity(i) == ODD or chart.weight(i) != 0:
                raise ValueError(
                    "center must be a zero of the weight field: nonzero "
                    f"entry at {name!r} (weight {chart.weight(i)})")
            shift[name] = val

    if shift:
        # run the homotopy in coordinates translated so the center is 0
        d_id = {n: diff(chart, n) for n in shift}
        fwd = {n: coord(chart, n) + const(chart, v) for n, v in shift.items()}
        back = {n: coord(chart, n) - const(chart, v) for n, v in shift.items()}
        prim = homotopy(substitute(w, fwd, d_id))
        return substitute(prim, back, d_id)
    return homotopy(w)


# -- zig-zag primitive for closed one-forms -----------------------------------------


def primitive_by_quadrature(beta: GradedExpr,
                            base: Optional[Dict[str, object]] = None) -> GradedExpr:
    """Primitive of a closed one-form by coordinate-wise quadrature.

    Integrates each even component along its axis (earlier coordinates at
    their final values, later ones frozen at the base point); odd components
    are absorbed algebraically.  Works for the transcendental function class
    as long as every component matches a supported integration pattern; the
    result vanishes at the base point.
    """
    chart = beta.chart
    if beta.is_zero():
        return zero(chart)
    if beta.form_degree() != 1:
        raise ValueError("expected a one-form")
    sigma = beta.parity()
    base = dict(base or {})
    for c in chart.coords:
        base.setdefault(c.name, 0)
        if c.parity == ODD and base[c.name] != 0:
            raise ValueError("odd base coordinates must be zero")

    names = list(chart.names)
    g = zero(chart)
    for i, name in enumerate(names):
        comp = beta.coefficient_of_diff(name)
        if comp.is_zero():
            continue
        freeze = {n: const(chart, Fraction(base[n]) if not isinstance(base[n], float)
                           else base[n]) for n in names[i + 1:]}
        comp = substitute(comp, freeze) if freeze else comp
        if chart.parity(i) == EVEN:
            g = g + integrate_univariate(comp, name, base[name], coord(chart, name))
        else:
            # left coefficient of d(xi) is (-1)**(parity(beta)+1) * d f / d xi
            comp0 = substitute(comp, {name: zero(chart)})
            sign = 1 if (sigma == ODD) else -1
            g = g + gmul(coord(chart, name), comp0) * sign
    return g


def log_primitive(w: GradedExpr, nabla: Optional[WeightVectorField] = None,
                  policy: EqualityPolicy = DEFAULT_POLICY
                  ) -> Tuple[GradedExpr, GradedExpr]:
    """Split a closed weight-zero one-form as c * d(x)/x + d(g) near a point
    where the weight field reads x d/dx, x = 1.

    The chart must be in that normal form: exactly one coordinate of weight
    one (even), all others weight zero.  Returns (c, g) with c a constant
    expression and g independent of x, vanishing at the distinguished point.
    """
    chart = w.chart
    nabla = nabla or weight_field_of_chart(chart)
    special = [i for i in range(chart.dim) if chart.weight(i) != 0]
    if (len(special) != 1 or chart.weight(special[0]) != 1
            or chart.parity(special[0]) != EVEN):
        raise ValueError("chart must have exactly one even coordinate of "
                         "weight 1 (the x of x d/dx) and weight 0 elsewhere")
    xname = chart.coords[special[0]].name
    if not equal(exterior_d(w), zero(chart), policy):
        raise PfaffianError("form is not closed")
    rep = degree_of(w, nabla, policy)
    if not rep.homogeneous or rep.degree is None or rep.degree.weight != 0:
        raise ValueError("log primitive needs a homogeneous weight-0 one-form")

    c_expr = interior(nabla.field, w)
    cval = c_expr.constant_value()
    if cval is None:
        raise ValueError(f"i_nabla of the form is not constant: {c_expr}")

    beta = w - gdiv(diff(chart, xname), coord(chart, xname)) * cval
    if not beta.coefficient_of_diff(xname).is_zero():
        raise ValueError("residual d(x)-component after removing c*d(x)/x")
    for name in chart.names:
        if name != xname and beta.coefficient_of_diff(name).depends_on(xname):
            raise ValueError("residual x-dependence: form is not in the "
                             "normal-form chart")
    base = {xname: 1}
    g = primitive_by_quadrature(beta, base)
    if not equal(exterior_d(g), beta, policy):
        raise ValueError("quadrature primitive failed verification")
    return const(chart, cval), g


# -- linear Darboux at a point -------------------------------------------------------


@dataclass
class LinearDarbouxResult:
    chart_map: ChartMap
    spec: NormalFormSpec
    residual: float

    def __bool__(self):
        return self.residual < 1e-9


def _constant_flat(omega: GradedExpr) -> np.ndarray:
    fm = flat_matrix(omega, {c.name: 0 for c in omega.chart.coords})
    return fm.matrix


def _skew_pairs(A: np.ndarray, tol: float) -> Tuple[List[np.ndarray],
                                                    List[np.ndarray],
                                                    List[np.ndarray]]:
    """Symplectic basis of a real skew form: pairs (u, v) with u^T A v = 1,
    plus a basis of the kernel."""
    n = A.shape[0]
    vs = [np.eye(n)[:, i] for i in range(n)]
    us, vvs = [], []
    while True:
        best = None
        for i in range(len(vs)):
            for j in range(len(vs)):
                if i == j:
                    continue
                val = float(vs[i] @ A @ vs[j])
                # prefer positive pairings below the diagonal so canonical
                # inputs come back as the identity map
                cand = (abs(val), 1 if (val > 0 and i > j) else 0, i, j, val)
                if best is None or cand[:2] > best[:2]:
                    best = cand
        if best is None or best[0] <= tol:
            break
        _, _, i, j, val = best
        u = vs[i]
        v = vs[j] / val
        rest = [w for k, w in enumerate(vs) if k not in (i, j)]
        vs = [w - float(w @ A @ v) * u + float(w @ A @ u) * v for w in rest]
        us.append(u)
        vvs.append(v)
    return us, vvs, vs


def linear_darboux(omega0: GradedExpr,
                   chart: Optional[ChartSpec] = None) -> LinearDarbouxResult:
    """Linear normal form of a constant-coefficient even two-form.

    The even-even block (skew) is brought to the standard pair form and the
    odd-odd block (symmetric) is congruence-diagonalized to +/-1 entries;
    kernel directions become residual coordinates.  The transform is checked
    by pulling the canonical form back.
    """
    chart = chart or omega0.chart
    if omega0.form_degree() not in (0, 2):
        raise ValueError("expected a two-form")
    if omega0.parity() not in (EVEN, None):
        raise PfaffianError("odd two-forms are verified only, not constructed")
    for pat, c in omega0.diff_components().items():
        if c.constant_value() is None:
            raise ValueError("expected constant coefficients")

    B = _constant_flat(omega0)
    ev = list(chart.even_indices)
    od = list(chart.odd_indices)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(B))) if B.size else 1.0)

    us, vvs, kernel_even = _skew_pairs(B[np.ix_(ev, ev)], tol)
    r = len(us)

    G = B[np.ix_(od, od)]
    if od:
        lam, V = np.linalg.eigh(G)
    else:
        lam, V = np.array([]), np.zeros((0, 0))
    keep = [l for l in range(len(lam)) if abs(lam[l]) > tol]
    # +1 block before -1 block
    keep.sort(key=lambda l: (0 if lam[l] > 0 else 1, -abs(lam[l])))
    eps = tuple(1 if lam[l] > 0 else -1 for l in keep)
    s = len(keep)
    kern_odd = [l for l in range(len(lam)) if abs(lam[l]) <= tol]

    # new even coordinates: rows of the inverse of the basis matrix
    names: List[CoordinateDecl] = []
    images: Dict[str, GradedExpr] = {}

    def lin_comb(row: np.ndarray, indices: List[int]) -> GradedExpr:
        e = zero(chart)
        for val, idx in zip(row, indices):
            if abs(val) > 1e-15:
                c = Fraction(val) if float(val).is_integer() else float(val)
                e = e + coord(chart, chart.coords[idx].name) * c
        return e

    if ev:
        P = np.column_stack(vvs + us + kernel_even) if (us or kernel_even) \
            else np.eye(len(ev))
        C = np.linalg.inv(P)
    else:
        C = np.zeros((0, 0))

    for i in range(r):
        names.append(CoordinateDecl(f"q{i + 1}", EVEN, 0))
        images[f"q{i + 1}"] = lin_comb(C[i], ev)
    for i in range(r):
        names.append(CoordinateDecl(f"p{i + 1}", EVEN, 0))
        images[f"p{i + 1}"] = lin_comb(C[r + i], ev)
    for l, idx in enumerate(keep):
        scale = math.sqrt(abs(lam[idx]) / 2.0)
        names.append(CoordinateDecl(f"y{l + 1}", ODD, 0))
        images[f"y{l + 1}"] = lin_comb(scale * V[:, idx], od)
    for j in range(len(kernel_even)):
        names.append(CoordinateDecl(f"z{j + 1}", EVEN, 0))
        images[f"z{j + 1}"] = lin_comb(C[2 * r + j], ev)
    for j, idx in enumerate(kern_odd):
        names.append(CoordinateDecl(f"w{j + 1}", ODD, 0))
        images[f"w{j + 1}"] = lin_comb(V[:, idx], od)

    # reorder role-wise: q.., p.., y.., then residual even, residual odd
    order = ([f"q{i + 1}" for i in range(r)] + [f"p{i + 1}" for i in range(r)]
             + [f"y{l + 1}" for l in range(s)]
             + [f"z{j + 1}" for j in range(len(kernel_even))]
             + [f"w{j + 1}" for j in range(len(kern_odd))])
    decls = {d.name: d for d in names}
    target = ChartSpec(tuple(decls[n] for n in order))
    spec = NormalFormSpec("presymplectic", r, s, eps,
                          residual=len(kernel_even) + len(kern_odd))
    phi = ChartMap(chart, target, images)
    back = pullback(phi, canonical_expr(spec, target))
    residual = (back - omega0).max_abs_coeff()
    return LinearDarbouxResult(phi, spec, residual)


# -- one-form Darboux assembly ---------------------------------------------------


def _potential_part(spec: NormalFormSpec, chart: ChartSpec) -> GradedExpr:
    inner = NormalFormSpec("potential", spec.r, spec.s, spec.eps)
    return canonical_expr(inner, chart)


def _jacobian_nonsingular(images: Sequence[GradedExpr], chart: ChartSpec,
                          base: Dict[str, object]) -> bool:
    n = chart.dim
    J = np.zeros((len(images), n))
    for i, img in enumerate(images):
        for j, name in enumerate(chart.names):
            J[i, j] = _body_value(partial(img, name), base)
    if J.shape[0] != n:
        return False
    return abs(float(np.linalg.det(J))) > 1e-9


def one_form_darboux(alpha: GradedExpr, presymp_chart: ChartMap,
                     r: int, s: int = 0, eps: Tuple[int, ...] = (),
                     nabla: Optional[WeightVectorField] = None,
                     base_point: Optional[Dict[str, object]] = None,
                     policy: EqualityPolicy = DEFAULT_POLICY) -> DarbouxResult:
    """Assemble a homogeneous normal form for a regular one-form, given a
    chart map that canonicalizes its differential.

    The construction follows the classification: transversal forms gain a
    primitive coordinate z (or exp of a primitive in the weight-zero,
    nonvanishing-weight-field case); contained forms must already reduce to
    the pair part, or the q-dependent correction is absorbed into the
    momenta.  Whatever is constructed is verified; failures downgrade the
    result instead of faking it.
    """
    chart = alpha.chart
    if presymp_chart.source != chart:
        raise ChartError("chart map must start at the form's chart")
    nabla = nabla or weight_field_of_chart(chart)
    base = {c.name: 0 for c in chart.coords}
    if base_point:
        base.update(base_point)

    notes: List[str] = []

    # guard: nabla(base) nonzero and inside the characteristic space
    nvec = np.array([_body_value(c, base) for c in nabla.field.coefficients])
    if float(np.linalg.norm(nvec)) > 1e-9:
        fm = flat_matrix(alpha, base)
        pairing = abs(float(nvec @ fm.alpha_row))
        dcontr = float(np.linalg.norm(nvec @ fm.matrix))
        if pairing < 1e-9 and dcontr < 1e-9:
            return DarbouxResult(
                status="not-guaranteed",
                notes=["weight field is nonzero at the base point and lies "
                       "in the characteristic space: no homogeneous normal "
                       "form is guaranteed there"])

    target = presymp_chart.target
    pre_spec = NormalFormSpec("presymplectic", r, s, tuple(eps),
                              residual=target.dim - 2 * r - s)
    dalpha = exterior_d(alpha)
    if not equal(dalpha, pullback(presymp_chart, canonical_expr(pre_spec, target)),
                 policy):
        raise PfaffianError("the supplied chart does not canonicalize the "
                            "differential of the form")

    alpha_prime = alpha - pullback(presymp_chart, _potential_part(pre_spec, target))
    if not equal(exterior_d(alpha_prime), zero(chart), policy):
        raise PfaffianError("residual one-form is not closed")

    rep = degree_of(alpha, nabla, policy)
    w = rep.degree.weight if (rep.homogeneous and rep.degree is not None) else None
    if not rep.homogeneous:
        notes.append("input form is not homogeneous: weight-law checks "
                     "will be reported as failures")

    cls = characteristic_class(alpha, n_points=8, policy=policy)
    if cls.kind == "irregular":
        raise PfaffianError("form has no constant class on the sample box")
    contact_like = cls.kind in ("contact", "precontact", "closed")

    nabla_vanishes = float(np.linalg.norm(nvec)) <= 1e-9
    log_branch = (not nabla_vanishes) and (w == 0) and contact_like

    roles_q = list(target.names[:r])
    roles_p = list(target.names[r:2 * r])
    roles_y = list(target.names[2 * r:2 * r + s])
    roles_rest = list(target.names[2 * r + s:])

    def image(n):
        return presymp_chart.images[n]

    if contact_like:
        if log_branch:
            f = _closed_primitive(alpha_prime, base, notes)
            if f is None:
                return DarbouxResult("verification-only", notes=notes)
            vexpr = nabla.field.apply(f)
            vval = vexpr.constant_value()
            if vval is None:
                notes.append("weight field applied to the primitive is not "
                             "constant: cannot form the exponential coordinate")
                return DarbouxResult("verification-only", notes=notes)
            z_img = apply_func("exp", f)
            variant = "contact-log"
        else:
            z_img = _closed_primitive(alpha_prime, base, notes)
            if z_img is None:
                return DarbouxResult("verification-only", notes=notes)
            variant = "contact"

        # z replaces one residual coordinate; pick one that keeps the
        # jacobian nonsingular at the base point
        chosen = None
        for drop in range(len(roles_rest)):
            keep_rest = [roles_rest[j] for j in range(len(roles_rest)) if j != drop]
            imgs = ([image(n) for n in roles_q] + [image(n) for n in roles_p]
                    + [z_img] + [image(n) for n in roles_y]
                    + [image(n) for n in keep_rest])
            if _jacobian_nonsingular(imgs, chart, base):
                chosen = keep_rest
                break
        if chosen is None and not roles_rest:
            chosen = []
            imgs = ([image(n) for n in roles_q] + [image(n) for n in roles_p]
                    + [z_img] + [image(n) for n in roles_y])
            if not _jacobian_nonsingular(imgs, chart, base):
                notes.append("no residual coordinate available and the "
                             "candidate chart is singular at the base point")
                return DarbouxResult("verification-only", notes=notes)
        if chosen is None:
            notes.append("could not replace a residual coordinate with z "
                         "while keeping the chart nonsingular")
            return DarbouxResult("verification-only", notes=notes)
        new_names = (roles_q + roles_p + ["z"] + roles_y + chosen)
        new_images = ([image(n) for n in roles_q] + [image(n) for n in roles_p]
                      + [z_img] + [image(n) for n in roles_y]
                      + [image(n) for n in chosen])
        out_spec = NormalFormSpec(variant, r, s, tuple(eps), len(chosen))
    else:
        # contained case: the residual must vanish or absorb into the momenta
        variant = "potential"
        if equal(alpha_prime, zero(chart), policy):
            new_names = roles_q + roles_p + roles_y + roles_rest
            new_images = [image(n) for n in new_names]
            out_spec = NormalFormSpec(variant, r, s, tuple(eps), len(roles_rest))
        else:
            if presymp_chart.inverse_images is None:
                notes.append("nonzero residual one-form and no inverse images "
                             "to absorb it: construction downgraded")
                return DarbouxResult("verification-only", notes=notes)
            inv = presymp_chart.inverse()
            ap_t = pullback(inv, alpha_prime)
            zt = _closed_primitive(ap_t, {n: 0 for n in target.names}, notes)
            if zt is None:
                return DarbouxResult("verification-only", notes=notes)
            bad = [n for n in target.names
                   if n not in roles_q and zt.depends_on(n)]
            if bad:
                notes.append(f"residual primitive depends on {bad}: "
                             "momentum absorption does not apply")
                return DarbouxResult("verification-only", notes=notes)
            new_names = roles_q + roles_p + roles_y + roles_rest
            new_images = []
            for n in roles_q:
                new_images.append(image(n))
            for qn, pn in zip(roles_q, roles_p):
                corr = substitute(partial(zt, qn), dict(presymp_chart.images))
                new_images.append(image(pn) + corr)
            for n in roles_y + roles_rest:
                new_images.append(image(n))
            out_spec = NormalFormSpec(variant, r, s, tuple(eps), len(roles_rest))
            notes.append("residual primitive absorbed into the momenta")

    # weights of the new coordinates
    decls = []
    weights: Dict[str, object] = {}
    for name, img in zip(new_names, new_images):
        drep = degree_of(img, nabla, policy)
        if drep.homogeneous and drep.degree is not None:
            wgt = drep.degree.weight
        else:
            wgt = None
            notes.append(f"new coordinate {name!r} is not homogeneous")
        weights[name] = wgt
        par = img.parity()
        decls.append(CoordinateDecl(name, par if par is not None else EVEN,
                                    wgt if isinstance(wgt, Fraction) else 0))
    new_chart = ChartSpec(tuple(decls), default_box=chart.default_box)
    phi_out = ChartMap(chart, new_chart,
                       {n: img for n, img in zip(new_names, new_images)})
    report = verify_normal_form(alpha, phi_out, out_spec, nabla, policy)
    status = "ok" if report.passed else "verification-only"
    return DarbouxResult(status, phi_out, out_spec, report, weights, notes)


def _closed_primitive(beta: GradedExpr, base: Dict[str, object],
                      notes: List[str]) -> Optional[GradedExpr]:
    if beta.is_zero():
        return zero(beta.chart)
    if beta.is_polynomial() and all(v == 0 for v in base.values()):
        return homotopy(beta)
    try:
        return primitive_by_quadrature(beta, base)
    except NonIntegrable as exc:
        notes.append(f"primitive construction failed: {exc}")
        return None


# -- verification ---------------------------------------------------------------


def verify_normal_form(alpha: GradedExpr, phi: ChartMap, spec: NormalFormSpec,
                       nabla: Optional[WeightVectorField] = None,
                       policy: EqualityPolicy = DEFAULT_POLICY
                       ) -> VerificationReport:
    """Certificate check of a candidate normal-form chart.

    (1) the canonical form pulls back to the form, (2) every new coordinate
    is homogeneous, (3) the recorded weights are consistent with the degree
    of the form.  Failures become report entries, never exceptions.
    """
    chart = alpha.chart
    nabla = nabla or weight_field_of_chart(chart)
    entries: List[CheckEntry] = []

    canonical = canonical_expr(spec, phi.target)
    res = equal(pullback(phi, canonical), alpha, policy)
    entries.append(CheckEntry("pullback-matches-form", bool(res),
                              res.mode if res else f"witness: {res.witness}"))
    mode = res.mode

    roles = spec.coordinate_roles(phi.target)
    wdeg = degree_of(alpha, nabla, policy)
    w = wdeg.degree.weight if (wdeg.homogeneous and wdeg.degree) else None
    entries.append(CheckEntry("form-homogeneous", wdeg.homogeneous,
                              f"degree {wdeg.degree}" if wdeg.degree else wdeg.note))

    coord_weights: Dict[str, object] = {}
    for name in phi.target.names:
        rep = degree_of(phi.images[name], nabla, policy)
        ok = rep.homogeneous
        coord_weights[name] = rep.degree.weight if (ok and rep.degree) else None
        entries.append(CheckEntry(f"coordinate-{name}-homogeneous", ok,
                                  f"weight {coord_weights[name]}"))

    def wsum(a, b):
        if a is None or b is None:
            return None
        return a + b

    if w is not None:
        for qn, pn in zip(roles["q"], roles["p"]):
            tot = wsum(coord_weights[qn], coord_weights[pn])
            want = Fraction(0) if spec.variant == "contact-log" else w
            entries.append(CheckEntry(
                f"pair-weight-{qn}-{pn}", tot == want,
                f"w({qn})+w({pn}) = {tot}, expected {want}"))
        for yn in roles["y"]:
            ww = coord_weights[yn]
            want = Fraction(0) if spec.variant == "contact-log" else w
            tot = None if ww is None else 2 * ww
            entries.append(CheckEntry(
                f"odd-weight-{yn}", tot == want,
                f"2*w({yn}) = {tot}, expected {want}"))
        if spec.variant == "contact":
            zn = roles["z"][0]
            entries.append(CheckEntry(
                "z-weight", coord_weights[zn] == w,
                f"w(z) = {coord_weights[zn]}, expected {w}"))
        if spec.variant == "contact-log":
            entries.append(CheckEntry("weight-zero-case", w == 0,
                                      f"form weight {w}"))

    passed = all(e.passed for e in entries)
    return VerificationReport(passed, entries, mode)


# -- numeric straightening ---------------------------------------------------------


class StraighteningError(RuntimeError):
    pass


def _compile_body(e: GradedExpr, names: List[str]) -> Callable:
    """Compile a purely even expression into a float-valued function."""
    idx = {n: i for i, n in enumerate(names)}
    funcs = {"sin": math.sin, "cos": math.cos, "exp": math.exp,
             "log": math.log, "sinh": math.sinh, "cosh": math.cosh}
    compiled_terms = []
    for m in e.terms:
        if any(m.dexp):
            raise StraighteningError("expected a function, found a form")
        powers = [(idx[e.chart.coords[i].name], k)
                  for i, k in enumerate(m.cexp) if k]
        atoms = []
        for a in m.atoms:
            sub = _compile_body(a.arg, names)
            if a.kind == "inv":
                atoms.append((lambda x, s=sub: 1.0 / s(x), a.power))
            else:
                atoms.append((lambda x, s=sub, f=funcs[a.kind]: f(s(x)), a.power))
        compiled_terms.append((float(m.coeff), powers, atoms))

    def fn(x):
        total = 0.0
        for c, powers, atoms in compiled_terms:
            v = c
            for i, k in powers:
                v *= x[i] ** k
            for g, p in atoms:
                v *= g(x) ** p
            total += v
        return total

    return fn


def _rk4_flow(f: Callable, x0: np.ndarray, t: float, h: float,
              limit: float = 1e6) -> np.ndarray:
    """Fixed-step RK4 flow of dx/dt = f(x) for time t."""
    steps = max(1, int(math.ceil(abs(t) / h)))
    dt = t / steps
    x = np.array(x0, dtype=float)
    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)) or float(np.max(np.abs(x))) > limit:
            raise StraighteningError(
                "flow left the working domain; reduce the box or step")
    return x


@dataclass
class StraighteningGrid:
    base: np.ndarray
    field_count: int
    slice_axes: List[int]
    flow_times: List[np.ndarray]
    nodes: List[Tuple[Tuple[float, ...], np.ndarray]]
    jacobians: List[np.ndarray]
    max_error: float
    certified: bool
    rk4_step: float
    fd_step: float

    def to_csv(self, path: str):
        n = len(self.base)
        with open(path, "w", newline="") as fh:
            fh.write(f"# base={list(map(float, self.base))} "
                     f"rk4_step={self.rk4_step} fd_step={self.fd_step}\n")
            writer = csv.writer(fh)
            writer.writerow([f"u{i + 1}" for i in range(n)]
                            + [f"x{i + 1}" for i in range(n)])
            for u, x in self.nodes:
                writer.writerow([f"{v:.12g}" for v in u]
                                + [f"{v:.12g}" for v in x])


def straighten_commuting(fields: Sequence[VectorField],
                         base: Sequence[float],
                         box: float = 0.5,
                         nodes_per_axis: int = 5,
                         rk4_step: float = 1e-3,
                         fd_step: float = 1e-3,
                         tol: float = 1e-6,
                         domain_limit: float = 1e6,
                         policy: EqualityPolicy = DEFAULT_POLICY
                         ) -> StraighteningGrid:
    """Numeric straightening of commuting independent even fields.

    Coordinates are built by composing flows from a transversal slice; the
    certificate compares the finite-difference pushforward of each field
    against the corresponding coordinate derivation on every grid node.
    """
    if not fields:
        raise ValueError("need at least one field")
    chart = fields[0].chart
    if not chart.is_purely_even():
        raise StraighteningError("numeric straightening handles purely even "
                                 "charts; verify super cases symbolically")
    for X in fields:
        if X.parity != EVEN or X.chart != chart:
            raise StraighteningError("fields must be even and share one chart")
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            br = lie_bracket(fields[i], fields[j])
            for c in br.coefficients:
                if not equal(c, zero(chart), policy):
                    raise StraighteningError(
                        f"fields {i} and {j} do not commute: [X_i,X_j] != 0")

    n = chart.dim
    k = len(fields)
    names = list(chart.names)
    base = np.array([float(b) for b in base])
    compiled = [[_compile_body(c, names) for c in X.coefficients]
                for X in fields]

    def fvec(ci):
        def f(x):
            return np.array([c(x) for c in ci])
        return f

    fvecs = [fvec(ci) for ci in compiled]

    M = np.array([[c(base) for c in ci] for ci in compiled])
    if _linalg.float_rank(M) < k:
        raise StraighteningError("fields are dependent at the base point")

    slice_axes: List[int] = []
    cur = M.copy()
    for j in range(n):
        if len(slice_axes) + k >= n:
            break
        cand = np.vstack([cur, np.eye(n)[j]])
        if _linalg.float_rank(cand) > _linalg.float_rank(cur):
            cur = cand
            slice_axes.append(j)

    axes = [np.linspace(-box, box, nodes_per_axis) for _ in range(k)] + \
           [np.linspace(-box, box, nodes_per_axis) for _ in slice_axes]

    def forward(u: Sequence[float]) -> np.ndarray:
        x = base.copy()
        for s_val, ax in zip(u[k:], slice_axes):
            x[ax] += s_val
        for i in reversed(range(k)):
            if u[i] != 0.0:
                x = _rk4_flow(fvecs[i], x, u[i], rk4_step, domain_limit)
        return x

    nodes = []
    jacobians = []
    max_err = 0.0
    total_axes = k + len(slice_axes)
    for combo in iproduct(*axes):
        x = forward(combo)
        J = np.zeros((n, total_axes))
        for m in range(total_axes):
            up = list(combo)
            dn = list(combo)
            up[m] += fd_step
            dn[m] -= fd_step
            J[:, m] = (forward(up) - forward(dn)) / (2 * fd_step)
        if abs(float(np.linalg.det(J))) < 1e-12 and total_axes == n:
            raise StraighteningError("singular jacobian on the grid "
                                     f"at u={combo}")
        Jinv = np.linalg.inv(J) if total_axes == n else np.linalg.pinv(J)
        for i in range(k):
            push = Jinv @ fvecs[i](x)
            err = float(np.max(np.abs(push - np.eye(total_axes)[i])))
            max_err = max(max_err, err)
        nodes.append((tuple(float(v) for v in combo), x))
        jacobians.append(J)

    return StraighteningGrid(base, k, slice_axes, axes, nodes, jacobians,
                             max_err, max_err < tol, rk4_step, fd_step)

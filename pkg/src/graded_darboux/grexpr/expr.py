"""Canonical bigraded expression algebra.

An expression is a sum of monomials over a fixed chart.  Each monomial is

    coefficient * (transcendental atoms) * (coordinate powers) * (differentials)

with the three groups kept in a fixed canonical order: atoms sorted by a
structural key, then coordinates in chart order, then differentials in chart
order.  Every generator carries a bidegree (form degree p, parity s) and
reordering two adjacent factors of bidegrees (p, s), (q, t) costs the sign
(-1)**(p*q + s*t).  All operations reduce to this one rule.

Generator bidegrees:

    even coordinate x      (0, 0)   commutes with everything
    odd coordinate  xi     (0, 1)   xi*xi = 0
    d(x), x even           (1, 0)   d(x)*d(x) = 0
    d(xi), xi odd          (1, 1)   d(xi)*d(xi) != 0

Coefficients are exact rationals by default; floats are allowed and taint
the expression into "inexact" mode (randomized equality only).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from .chart import ChartSpec, ChartError, EVEN, ODD

Number = Union[int, Fraction, float]

FUNC_KINDS = ("sin", "cos", "exp", "log", "sinh", "cosh")
ATOM_KINDS = FUNC_KINDS + ("inv",)


class ParityError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


def _cnum(v: Number):
    """Normalize a scalar coefficient: ints become Fractions, floats stay."""
    if isinstance(v, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, (Fraction, float)):
        return v
    raise TypeError(f"cannot use {v!r} as a coefficient")


def _coeff_key(c):
    if isinstance(c, Fraction):
        return ("q", c.numerator, c.denominator)
    return ("f", repr(c))


class Atom:
    """A transcendental factor ``kind(arg)**power``; ``inv`` is 1/arg.

    The argument must be even and of form degree 0.
    """

    __slots__ = ("kind", "arg", "power", "_mkey")

    def __init__(self, kind: str, arg: "GradedExpr", power: int = 1):
        if kind not in ATOM_KINDS:
            raise ValueError(f"unknown atom kind {kind!r}")
        if power < 1:
            raise ValueError("atom power must be >= 1")
        if arg.form_degree() != 0:
            raise ParityError(f"{kind} applied to a form-valued argument")
        if arg.parity() not in (EVEN, None):
            raise ParityError(f"{kind} applied to an odd argument")
        self.kind = kind
        self.arg = arg
        self.power = power
        self._mkey = (kind, arg.key())

    def merge_key(self):
        return self._mkey

    def full_key(self):
        return (self.kind, self.arg.key(), self.power)

    def with_power(self, power: int) -> "Atom":
        return Atom(self.kind, self.arg, power)

    def __repr__(self):
        return f"{self.kind}({self.arg!r})^{self.power}"


class Monomial:
    __slots__ = ("coeff", "atoms", "cexp", "dexp", "_key")

    def __init__(self, coeff, atoms: Tuple[Atom, ...], cexp: Tuple[int, ...],
                 dexp: Tuple[int, ...]):
        self.coeff = coeff
        self.atoms = atoms
        self.cexp = cexp
        self.dexp = dexp
        self._key = None

    def key(self):
        if self._key is None:
            self._key = (
                tuple(a.full_key() for a in self.atoms),
                self.cexp,
                self.dexp,
            )
        return self._key

    def sort_key(self):
        return (sum(self.dexp), self.dexp, self.cexp,
                tuple(a.full_key() for a in self.atoms))

    def form_degree(self) -> int:
        return sum(self.dexp)

    def parity(self, chart: ChartSpec) -> int:
        s = 0
        for i in chart.odd_indices:
            s += self.cexp[i] + self.dexp[i]
        return s % 2

    def is_exact(self) -> bool:
        if not isinstance(self.coeff, Fraction):
            return False
        return all(a.arg.is_exact() for a in self.atoms)

    def is_polynomial(self) -> bool:
        return not self.atoms


def _sign_word(m: Monomial, chart: ChartSpec):
    """Sign-relevant generators of a canonical monomial, in order.

    Entries are ``(pos, p, s)`` with ``pos`` the canonical position key and
    (p, s) the generator bidegree mod 2.  Even coordinates are omitted (they
    never contribute signs).
    """
    word = []
    for i in chart.odd_indices:
        if m.cexp[i]:
            word.append(((0, i), 0, 1))
    for i, k in enumerate(m.dexp):
        if k:
            s = chart.parity(i)
            if s == EVEN:
                word.append(((1, i), 1, 0))
            else:
                word.extend(((1, i), 1, 1) for _ in range(k))
    return word


def _mul_monomials(m1: Monomial, m2: Monomial, chart: ChartSpec) -> Optional[Monomial]:
    # square-zero collisions
    for i in chart.odd_indices:
        if m1.cexp[i] and m2.cexp[i]:
            return None
    for i in chart.even_indices:
        if m1.dexp[i] and m2.dexp[i]:
            return None

    # Koszul sign: every generator of m2 crosses the generators of m1 that
    # sit after its canonical position.
    sign = 1
    w1 = _sign_word(m1, chart)
    w2 = _sign_word(m2, chart)
    for pos_a, pa, sa in w2:
        for pos_b, pb, sb in w1:
            if pos_a < pos_b:
                if (pa * pb + sa * sb) % 2:
                    sign = -sign

    cexp = tuple(a + b for a, b in zip(m1.cexp, m2.cexp))
    dexp = tuple(a + b for a, b in zip(m1.dexp, m2.dexp))

    merged: Dict[tuple, Atom] = {}
    for a in m1.atoms + m2.atoms:
        k = a.merge_key()
        if k in merged:
            merged[k] = merged[k].with_power(merged[k].power + a.power)
        else:
            merged[k] = a
    atoms = tuple(sorted(merged.values(), key=Atom.full_key))

    return Monomial(m1.coeff * m2.coeff * sign, atoms, cexp, dexp)


def _reduce_inverses(m: Monomial, chart: ChartSpec) -> Monomial:
    """Cancel coordinate/atom content against 1/(single monomial) factors,
    so that x * (1/x) normalizes to 1."""
    while True:
        progress = False
        for idx, a in enumerate(m.atoms):
            if a.kind != "inv" or len(a.arg.terms) != 1:
                continue
            d = a.arg.terms[0]
            if a.power == 1:
                new_atoms = m.atoms[:idx] + m.atoms[idx + 1:]
            else:
                new_atoms = (m.atoms[:idx] + (a.with_power(a.power - 1),)
                             + m.atoms[idx + 1:])
            rest = Monomial(m.coeff, new_atoms, m.cexp, m.dexp)
            q = _divide_monomial(rest, d, chart)
            if q is not None:
                m = q
                progress = True
                break
        if not progress:
            return m


class GradedExpr:
    """Immutable canonical element of the bigraded algebra over a chart."""

    __slots__ = ("chart", "terms", "_hash", "_ekey")

    def __init__(self, chart: ChartSpec, terms: Tuple[Monomial, ...]):
        # assumes terms already canonical; use the factory functions below
        self.chart = chart
        self.terms = terms
        self._hash = None
        self._ekey = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_terms(chart: ChartSpec, terms: Iterable[Monomial]) -> "GradedExpr":
        acc: Dict[tuple, Monomial] = {}
        for m in terms:
            if m.coeff == 0:
                continue
            if m.atoms:
                m = _reduce_inverses(m, chart)
            k = m.key()
            if k in acc:
                old = acc[k]
                c = old.coeff + m.coeff
                if c == 0:
                    del acc[k]
                else:
                    acc[k] = Monomial(c, old.atoms, old.cexp, old.dexp)
            else:
                acc[k] = m
        out = tuple(sorted(acc.values(), key=Monomial.sort_key))
        return GradedExpr(chart, out)

    # -- structural queries --------------------------------------------------

    def key(self):
        if self._ekey is None:
            self._ekey = tuple(m.key() + (_coeff_key(m.coeff),) for m in self.terms)
        return self._ekey

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart.names, self.key()))
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, GradedExpr):
            return NotImplemented
        return self.chart == other.chart and self.key() == other.key()

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(m.is_exact() for m in self.terms)

    def is_polynomial(self) -> bool:
        return all(m.is_polynomial() for m in self.terms)

    def form_degree(self) -> Optional[int]:
        """Common form degree of all monomials, or None if mixed/zero-free."""
        degs = {m.form_degree() for m in self.terms}
        if not degs:
            return 0
        if len(degs) == 1:
            return degs.pop()
        return None

    def parity(self) -> Optional[int]:
        """Common parity, or None if mixed. The zero expression reports None."""
        ps = {m.parity(self.chart) for m in self.terms}
        if len(ps) == 1:
            return ps.pop()
        return None

    def depends_on(self, name: str) -> bool:
        i = self.chart.index(name)
        for m in self.terms:
            if m.cexp[i] or m.dexp[i]:
                return True
            if any(a.arg.depends_on(name) for a in m.atoms):
                return True
        return False

    def constant_value(self):
        """The scalar value if the expression is a constant, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1:
            m = self.terms[0]
            if not m.atoms and not any(m.cexp) and not any(m.dexp):
                return m.coeff
        return None

    def max_abs_coeff(self) -> float:
        return max((abs(float(m.coeff)) for m in self.terms), default=0.0)

    def diff_components(self) -> Dict[Tuple[int, ...], "GradedExpr"]:
        """Split a form into its differential-word components.

        Returns a map from differential exponent pattern to the (form-degree
        zero) left coefficient expression.
        """
        zero_d = (0,) * self.chart.dim
        groups: Dict[Tuple[int, ...], List[Monomial]] = {}
        for m in self.terms:
            groups.setdefault(m.dexp, []).append(
                Monomial(m.coeff, m.atoms, m.cexp, zero_d))
        return {
            pat: GradedExpr.from_terms(self.chart, ms) for pat, ms in groups.items()
        }

    def coefficient_of_diff(self, name: str) -> "GradedExpr":
        """Left coefficient of d(name) in a 1-form."""
        i = self.chart.index(name)
        pat = tuple(1 if j == i else 0 for j in range(self.chart.dim))
        return self.diff_components().get(pat, zero(self.chart))

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, GradedExpr):
            if other.chart != self.chart:
                raise ChartError("operands live on different charts")
            return other
        return const(self.chart, _cnum(other))

    def __add__(self, other):
        other = self._coerce(other)
        return GradedExpr.from_terms(self.chart, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return GradedExpr(
            self.chart,
            tuple(Monomial(-m.coeff, m.atoms, m.cexp, m.dexp) for m in self.terms),
        )

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + self._coerce(other)

    def __mul__(self, other):
        return gmul(self, self._coerce(other))

    def __rmul__(self, other):
        return gmul(self._coerce(other), self)

    def __truediv__(self, other):
        return gdiv(self, self._coerce(other))

    def __rtruediv__(self, other):
        return gdiv(self._coerce(other), self)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponents must be non-negative integers")
        out = one(self.chart)
        for _ in range(n):
            out = gmul(out, self)
        return out

    def __str__(self):
        from .parser import format_expr
        return format_expr(self)

    def __repr__(self):
        return f"<{self}>"


# -- basic constructors ------------------------------------------------------


def zero(chart: ChartSpec) -> GradedExpr:
    return GradedExpr(chart, ())


def const(chart: ChartSpec, value: Number) -> GradedExpr:
    value = _cnum(value)
    if value == 0:
        return zero(chart)
    n = chart.dim
    return GradedExpr(chart, (Monomial(value, (), (0,) * n, (0,) * n),))


def one(chart: ChartSpec) -> GradedExpr:
    return const(chart, 1)


def coord(chart: ChartSpec, name: str) -> GradedExpr:
    i = chart.index(name)
    n = chart.dim
    cexp = tuple(1 if j == i else 0 for j in range(n))
    return GradedExpr(chart, (Monomial(Fraction(1), (), cexp, (0,) * n),))


def diff(chart: ChartSpec, name: str) -> GradedExpr:
    i = chart.index(name)
    n = chart.dim
    dexp = tuple(1 if j == i else 0 for j in range(n))
    return GradedExpr(chart, (Monomial(Fraction(1), (), (0,) * n, dexp),))


def coords(chart: ChartSpec) -> Tuple[GradedExpr, ...]:
    return tuple(coord(chart, c.name) for c in chart.coords)


def apply_func(kind: str, arg: GradedExpr) -> GradedExpr:
    """Apply a transcendental atom to an even, form-degree-0 argument.

    Only literal special values are simplified (sin(0)=0, exp(0)=1, ...);
    everything else stays symbolic.
    """
    if kind == "inv":
        return gdiv(one(arg.chart), arg)
    if kind not in FUNC_KINDS:
        raise ValueError(f"unknown function {kind!r}")
    cval = arg.constant_value()
    if cval == 0:
        if kind in ("sin", "sinh"):
            return zero(arg.chart)
        if kind in ("cos", "cosh", "exp"):
            return one(arg.chart)
        if kind == "log":
            raise EvaluationError("log of zero")
    if kind == "log" and cval == 1:
        return zero(arg.chart)
    if kind in ("exp", "log") and len(arg.terms) == 1:
        m = arg.terms[0]
        if (m.coeff == 1 and not any(m.cexp) and not any(m.dexp)
                and len(m.atoms) == 1 and m.atoms[0].power == 1
                and m.atoms[0].kind == ("log" if kind == "exp" else "exp")):
            return m.atoms[0].arg
    n = arg.chart.dim
    return GradedExpr(
        arg.chart,
        (Monomial(Fraction(1), (Atom(kind, arg),), (0,) * n, (0,) * n),),
    )


# -- products and quotients ----------------------------------------------------


def gmul(a: GradedExpr, b: GradedExpr) -> GradedExpr:
    """Graded product (wedge when both factors carry differentials)."""
    if a.chart != b.chart:
        raise ChartError("gmul of expressions on different charts")
    out = []
    for m1 in a.terms:
        for m2 in b.terms:
            m = _mul_monomials(m1, m2, a.chart)
            if m is not None:
                out.append(m)
    return GradedExpr.from_terms(a.chart, out)


def _divide_monomial(m: Monomial, d: Monomial, chart: ChartSpec) -> Optional[Monomial]:
    """Exact division of a monomial by a (single, even, degree-0) monomial."""
    atoms: Dict[tuple, Atom] = {a.merge_key(): a for a in m.atoms}
    for da in d.atoms:
        k = da.merge_key()
        have = atoms.get(k)
        if have is None or have.power < da.power:
            return None
        if have.power == da.power:
            del atoms[k]
        else:
            atoms[k] = have.with_power(have.power - da.power)
    cexp = []
    for e1, e2 in zip(m.cexp, d.cexp):
        if e1 < e2:
            return None
        cexp.append(e1 - e2)
    if any(d.dexp):
        return None
    cand = Monomial(
        Fraction(1),
        tuple(sorted(atoms.values(), key=Atom.full_key)),
        tuple(cexp),
        m.dexp,
    )
    # fix the overall sign/coefficient by multiplying back
    back = _mul_monomials(cand, d, chart)
    if back is None:
        return None
    return Monomial(m.coeff / back.coeff, cand.atoms, cand.cexp, cand.dexp)


def gdiv(a: GradedExpr, b: GradedExpr) -> GradedExpr:
    """Quotient by an even, form-degree-0 expression.

    Cancels exactly when the divisor is a single monomial that divides every
    term; otherwise the divisor is kept as a symbolic ``1/(...)`` factor
    (with unit leading coefficient).
    """
    if a.chart != b.chart:
        raise ChartError("gdiv of expressions on different charts")
    if b.is_zero():
        raise ZeroDivisionError("division by the zero expression")
    if b.form_degree() != 0:
        raise ParityError("division by a form-valued expression")
    if b.parity() not in (EVEN, None):
        raise ParityError("division by an odd expression")
    if all(any(m.cexp[i] for i in b.chart.odd_indices) for m in b.terms):
        raise ZeroDivisionError("division by a nilpotent (zero-body) expression")

    cval = b.constant_value()
    if cval is not None:
        if cval == 0:
            raise ZeroDivisionError("division by zero")
        return GradedExpr(
            a.chart,
            tuple(Monomial(m.coeff / cval, m.atoms, m.cexp, m.dexp) for m in a.terms),
        )

    if len(b.terms) == 1:
        d = b.terms[0]
        out = []
        for m in a.terms:
            q = _divide_monomial(m, d, a.chart)
            if q is None:
                break
            out.append(q)
        else:
            return GradedExpr.from_terms(a.chart, out)
        # factor-by-factor symbolic inverse of the single monomial, so that
        # partial cancellations (x * 1/x^2 -> 1/x) keep working
        n = a.chart.dim
        acc = a * (Fraction(1) / d.coeff if isinstance(d.coeff, Fraction)
                   else 1.0 / d.coeff)
        for i, k in enumerate(d.cexp):
            if k:
                ci = coord(a.chart, a.chart.coords[i].name)
                inv_c = GradedExpr(
                    a.chart,
                    (Monomial(Fraction(1), (Atom("inv", ci, k),),
                              (0,) * n, (0,) * n),))
                acc = gmul(acc, inv_c)
        for at in d.atoms:
            if at.kind == "inv":
                acc = gmul(acc, at.arg ** at.power)
            else:
                base = GradedExpr(
                    a.chart,
                    (Monomial(Fraction(1), (Atom(at.kind, at.arg),),
                              (0,) * n, (0,) * n),))
                inv_a = GradedExpr(
                    a.chart,
                    (Monomial(Fraction(1), (Atom("inv", base, at.power),),
                              (0,) * n, (0,) * n),))
                acc = gmul(acc, inv_a)
        return acc

    # symbolic quotient: normalize the divisor to unit leading coefficient
    lead = b.terms[0].coeff
    bn = GradedExpr(
        b.chart,
        tuple(Monomial(m.coeff / lead, m.atoms, m.cexp, m.dexp) for m in b.terms),
    )
    n = a.chart.dim
    inv_expr = GradedExpr(
        a.chart,
        (Monomial(Fraction(1), (Atom("inv", bn),), (0,) * n, (0,) * n),),
    )
    return gmul(a, inv_expr) * (Fraction(1) / lead if isinstance(lead, Fraction)
                                else 1.0 / lead)


# -- Leibniz walks -------------------------------------------------------------


def _factor_list(m: Monomial, chart: ChartSpec):
    """Factors of a monomial in canonical order with bidegrees mod 2.

    Yields ``(tag, payload, p, s)`` where tag is 'atom' | 'coord' | 'diff'.
    """
    out = []
    for a in m.atoms:
        out.append(("atom", a, 0, 0))
    for i, k in enumerate(m.cexp):
        if k:
            out.append(("coord", (i, k), 0, (chart.parity(i) * k) % 2))
    for i, k in enumerate(m.dexp):
        if k:
            out.append(("diff", (i, k), k % 2, (chart.parity(i) * k) % 2))
    return out


def _single_factor_expr(chart: ChartSpec, tag, payload) -> GradedExpr:
    n = chart.dim
    if tag == "atom":
        return GradedExpr(
            chart, (Monomial(Fraction(1), (payload,), (0,) * n, (0,) * n),))
    i, k = payload
    if tag == "coord":
        cexp = tuple(k if j == i else 0 for j in range(n))
        return GradedExpr(chart, (Monomial(Fraction(1), (), cexp, (0,) * n),))
    dexp = tuple(k if j == i else 0 for j in range(n))
    return GradedExpr(chart, (Monomial(Fraction(1), (), (0,) * n, dexp),))


def leibniz_walk(e: GradedExpr, op_p: int, op_s: int,
                 image: Callable) -> GradedExpr:
    """Apply a graded derivation of bidegree (op_p, op_s) (mod 2).

    ``image(tag, payload)`` returns the derivation's value on a single factor
    (or None for zero).  Crossing a factor of bidegree (p, s) costs
    (-1)**(op_p*p + op_s*s).
    """
    chart = e.chart
    total = zero(chart)
    for m in e.terms:
        factors = _factor_list(m, chart)
        sign = 1
        for idx, (tag, payload, p, s) in enumerate(factors):
            img = image(tag, payload)
            if img is not None and not img.is_zero():
                term = const(chart, m.coeff * sign)
                for t2, pl2, _, _ in factors[:idx]:
                    term = gmul(term, _single_factor_expr(chart, t2, pl2))
                term = gmul(term, img)
                for t2, pl2, _, _ in factors[idx + 1:]:
                    term = gmul(term, _single_factor_expr(chart, t2, pl2))
                total = total + term
            if (op_p * p + op_s * s) % 2:
                sign = -sign
    return total


_DERIV_TABLE = {
    "sin": lambda arg: apply_func("cos", arg),
    "cos": lambda arg: -apply_func("sin", arg),
    "exp": lambda arg: apply_func("exp", arg),
    "log": lambda arg: apply_func("inv", arg),
    "sinh": lambda arg: apply_func("cosh", arg),
    "cosh": lambda arg: apply_func("sinh", arg),
    "inv": lambda arg: -(apply_func("inv", arg) ** 2),
}


def atom_chain(a: Atom, darg: GradedExpr) -> GradedExpr:
    """d(kind(arg)**power) given d(arg): power*kind(arg)**(power-1)*kind'(arg)*darg."""
    chart = a.arg.chart
    head = const(chart, a.power)
    if a.power > 1:
        head = gmul(head, _single_factor_expr(chart, "atom", a.with_power(a.power - 1)))
    head = gmul(head, _DERIV_TABLE[a.kind](a.arg))
    return gmul(head, darg)


def partial(a: GradedExpr, name: str) -> GradedExpr:
    """Left partial derivative along a coordinate; differentials are constants."""
    chart = a.chart
    xi = chart.index(name)
    sx = chart.parity(xi)

    def image(tag, payload):
        if tag == "coord":
            i, k = payload
            if i != xi:
                return None
            if chart.parity(i) == ODD:
                return one(chart)
            if k == 1:
                return one(chart)
            return const(chart, k) * _single_factor_expr(chart, "coord", (i, k - 1))
        if tag == "atom":
            if not payload.arg.depends_on(name):
                return None
            return atom_chain(payload, partial(payload.arg, name))
        return None

    return leibniz_walk(a, 0, sx, image)


def canonicalize(a: GradedExpr) -> GradedExpr:
    """Re-normalize (idempotent: expressions are canonical by construction)."""
    return GradedExpr.from_terms(a.chart, a.terms)


# -- substitution ---------------------------------------------------------------


def substitute(a: GradedExpr,
               images: Optional[Dict[str, GradedExpr]] = None,
               d_images: Optional[Dict[str, GradedExpr]] = None) -> GradedExpr:
    """Graded algebra homomorphism defined on generators.

    ``images`` maps coordinate names to expressions (parity-preserving, form
    degree 0); ``d_images`` maps coordinate names to the image of d(name).
    Unmapped generators map to themselves, which requires the target chart to
    carry a coordinate of the same name and parity.
    """
    images = dict(images or {})
    d_images = dict(d_images or {})
    src = a.chart

    target = None
    for e in list(images.values()) + list(d_images.values()):
        if target is None:
            target = e.chart
        elif e.chart != target:
            raise ChartError("substitution images live on different charts")
    if target is None:
        target = src

    for name, img in images.items():
        i = src.index(name)
        if img.form_degree() != 0:
            raise ParityError(f"image of {name} must have form degree 0")
        if not img.is_zero() and img.parity() != src.parity(i):
            raise ParityError(f"image of {name} does not preserve parity")

    def coord_image(i: int) -> GradedExpr:
        name = src.coords[i].name
        if name in images:
            return images[name]
        if target == src:
            return coord(src, name)
        if name in target.names and target.parity(target.index(name)) == src.parity(i):
            return coord(target, name)
        raise ChartError(f"no image declared for coordinate {name!r}")

    def diff_image(i: int) -> GradedExpr:
        name = src.coords[i].name
        if name in d_images:
            return d_images[name]
        if name in images:
            raise ChartError(f"no image declared for d({name}) "
                             "(coordinate itself is remapped)")
        if target == src:
            return diff(src, name)
        if name in target.names and target.parity(target.index(name)) == src.parity(i):
            return diff(target, name)
        raise ChartError(f"no image declared for d({name})")

    total = zero(target)
    for m in a.terms:
        term = const(target, m.coeff)
        for a_ in m.atoms:
            arg2 = substitute(a_.arg, images, d_images)
            if a_.kind == "inv":
                val = gdiv(one(target), arg2)
            else:
                val = apply_func(a_.kind, arg2)
            term = gmul(term, val ** a_.power)
            if term.is_zero():
                break
        if term.is_zero():
            continue
        for i, k in enumerate(m.cexp):
            if k:
                term = gmul(term, coord_image(i) ** k)
                if term.is_zero():
                    break
        if term.is_zero():
            continue
        for i, k in enumerate(m.dexp):
            if k:
                term = gmul(term, diff_image(i) ** k)
                if term.is_zero():
                    break
        total = total + term
    return total

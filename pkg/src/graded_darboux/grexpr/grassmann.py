"""Numeric evaluation of superfunctions in a finite Grassmann algebra.

Each odd coordinate of a chart is assigned one nilpotent generator; values
are elements of the exterior algebra over those generators with float
coefficients.  The body is the generator-free part; the soul is nilpotent,
so transcendental functions evaluate by a finite Taylor series around the
body and inverses by a terminating geometric series.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple, Union

from .chart import EVEN
from .expr import EvaluationError, GradedExpr


class GrassmannValue:
    """Element of the exterior algebra on ``ngens`` anticommuting generators.

    ``data`` maps sorted generator-index tuples to float coefficients;
    the empty tuple indexes the body.
    """

    __slots__ = ("ngens", "data")

    def __init__(self, ngens: int, data: Optional[Mapping[Tuple[int, ...], float]] = None):
        self.ngens = ngens
        self.data: Dict[Tuple[int, ...], float] = {}
        if data:
            for k, v in data.items():
                if v != 0.0:
                    self.data[tuple(k)] = float(v)

    @staticmethod
    def scalar(value: float, ngens: int) -> "GrassmannValue":
        return GrassmannValue(ngens, {(): float(value)})

    @staticmethod
    def generator(i: int, ngens: int, scale: float = 1.0) -> "GrassmannValue":
        if not 0 <= i < ngens:
            raise ValueError(f"generator index {i} out of range")
        return GrassmannValue(ngens, {(i,): float(scale)})

    @property
    def body(self) -> float:
        return self.data.get((), 0.0)

    def soul(self) -> "GrassmannValue":
        return GrassmannValue(self.ngens, {k: v for k, v in self.data.items() if k})

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in self.data.values())

    def parity(self) -> Optional[int]:
        ps = {len(k) % 2 for k in self.data}
        if len(ps) == 1:
            return ps.pop()
        return None if ps else EVEN

    def __add__(self, other):
        other = self._coerce(other)
        data = dict(self.data)
        for k, v in other.data.items():
            data[k] = data.get(k, 0.0) + v
        return GrassmannValue(self.ngens, data)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannValue(self.ngens, {k: -v for k, v in self.data.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + self._coerce(other)

    def _coerce(self, other) -> "GrassmannValue":
        if isinstance(other, GrassmannValue):
            if other.ngens != self.ngens:
                raise ValueError("mixed generator counts")
            return other
        return GrassmannValue.scalar(float(other), self.ngens)

    def __mul__(self, other):
        other = self._coerce(other)
        data: Dict[Tuple[int, ...], float] = {}
        for k1, v1 in self.data.items():
            for k2, v2 in other.data.items():
                merged, sign = _merge_indices(k1, k2)
                if merged is None:
                    continue
                data[merged] = data.get(merged, 0.0) + sign * v1 * v2
        return GrassmannValue(self.ngens, data)

    def __rmul__(self, other):
        return self._coerce(other) * self

    def __pow__(self, n: int):
        out = GrassmannValue.scalar(1.0, self.ngens)
        for _ in range(n):
            out = out * self
        return out

    def apply_series(self, derivs) -> "GrassmannValue":
        """Evaluate f at this value given ``derivs(k) = f^(k)(body)``.

        Finite Taylor expansion around the body; terminates because the soul
        is nilpotent.
        """
        s = self.soul()
        out = GrassmannValue.scalar(derivs(0), self.ngens)
        power = GrassmannValue.scalar(1.0, self.ngens)
        fact = 1.0
        for k in range(1, self.ngens + 1):
            power = power * s
            if power.is_zero():
                break
            fact *= k
            out = out + (derivs(k) / fact) * power
        return out

    def inverse(self) -> "GrassmannValue":
        b = self.body
        if b == 0.0:
            raise EvaluationError("division by a value with zero body")
        s = self.soul()
        out = GrassmannValue.scalar(1.0 / b, self.ngens)
        term = GrassmannValue.scalar(1.0 / b, self.ngens)
        for _ in range(self.ngens):
            term = term * s * (-1.0 / b)
            if term.is_zero():
                break
            out = out + term
        return out

    def coefficients(self) -> Dict[Tuple[int, ...], float]:
        return dict(self.data)

    def __repr__(self):
        if not self.data:
            return "G(0)"
        bits = []
        for k in sorted(self.data, key=lambda t: (len(t), t)):
            label = "".join(f"e{i}" for i in k) or "1"
            bits.append(f"{self.data[k]:+g}*{label}")
        return "G(" + " ".join(bits) + ")"


def _merge_indices(a: Tuple[int, ...], b: Tuple[int, ...]):
    """Concatenate two sorted index words; None if a generator repeats."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    if set(a) & set(b):
        return None, 0
    sign = 1
    for x in b:
        # x crosses every generator of a greater than it
        sign *= (-1) ** sum(1 for y in a if y > x)
    merged = tuple(sorted(a + b))
    return merged, sign


def _atom_derivs(kind: str, body: float):
    """Derivative sequence f^(k)(body) for the supported atoms."""
    if kind == "sin":
        cyc = (math.sin(body), math.cos(body), -math.sin(body), -math.cos(body))
        return lambda k: cyc[k % 4]
    if kind == "cos":
        cyc = (math.cos(body), -math.sin(body), -math.cos(body), math.sin(body))
        return lambda k: cyc[k % 4]
    if kind == "exp":
        e = math.exp(body)
        return lambda k: e
    if kind == "sinh":
        sh, ch = math.sinh(body), math.cosh(body)
        return lambda k: sh if k % 2 == 0 else ch
    if kind == "cosh":
        sh, ch = math.sinh(body), math.cosh(body)
        return lambda k: ch if k % 2 == 0 else sh
    if kind == "log":
        if body <= 0.0:
            raise EvaluationError("log of a value with nonpositive body")

        def dlog(k, b=body):
            if k == 0:
                return math.log(b)
            return (-1.0) ** (k - 1) * math.factorial(k - 1) / b ** k

        return dlog
    raise ValueError(kind)


PointValue = Union[float, int, Fraction, GrassmannValue]


def eval_numeric(a: GradedExpr, point: Mapping[str, PointValue],
                 seed: int = 0) -> GrassmannValue:
    """Evaluate a form-degree-0 expression at a point.

    Even coordinates take real values; odd coordinates take odd Grassmann
    values (missing odd coordinates default to their own unit generator).
    Deterministic given its inputs; ``seed`` is accepted for interface
    symmetry with the randomized services built on top.
    """
    chart = a.chart
    odd = chart.odd_indices
    ngens = len(odd)
    gen_of = {chart.coords[i].name: g for g, i in enumerate(odd)}

    values: Dict[int, GrassmannValue] = {}
    for i, c in enumerate(chart.coords):
        v = point.get(c.name)
        if c.parity == EVEN:
            if v is None:
                raise EvaluationError(f"no value for coordinate {c.name!r}")
            if isinstance(v, GrassmannValue):
                values[i] = v
            else:
                values[i] = GrassmannValue.scalar(float(v), ngens)
        else:
            if v is None:
                values[i] = GrassmannValue.generator(gen_of[c.name], ngens)
            elif isinstance(v, GrassmannValue):
                if v.ngens != ngens:
                    raise EvaluationError("odd assignment has wrong generator count")
                values[i] = v
            else:
                values[i] = GrassmannValue.generator(gen_of[c.name], ngens,
                                                     scale=float(v))

    return _eval(a, values, ngens)


def _eval(a: GradedExpr, values: Dict[int, GrassmannValue], ngens: int) -> GrassmannValue:
    total = GrassmannValue(ngens)
    for m in a.terms:
        if any(m.dexp):
            raise EvaluationError("eval_numeric expects form degree 0; "
                                  "evaluate form components instead")
        acc = GrassmannValue.scalar(float(m.coeff), ngens)
        for at in m.atoms:
            argval = _eval(at.arg, values, ngens)
            if at.kind == "inv":
                v = argval.inverse()
            else:
                v = argval.apply_series(_atom_derivs(at.kind, argval.body))
            acc = acc * (v ** at.power)
        for i, k in enumerate(m.cexp):
            if k:
                acc = acc * (values[i] ** k)
        total = total + acc
    return total


def eval_body_exact(a: GradedExpr, point: Mapping[str, Union[int, Fraction]]) -> Fraction:
    """Exact body evaluation of a polynomial expression at a rational point.

    Odd coordinates evaluate to zero.  Raises if the expression carries
    transcendental atoms or float coefficients.
    """
    chart = a.chart
    total = Fraction(0)
    for m in a.terms:
        if any(m.dexp):
            raise EvaluationError("body evaluation expects form degree 0")
        if m.atoms:
            raise EvaluationError("exact body evaluation needs a polynomial expression")
        if not isinstance(m.coeff, Fraction):
            raise EvaluationError("exact body evaluation needs exact coefficients")
        if any(m.cexp[i] for i in chart.odd_indices):
            continue
        val = m.coeff
        for i, k in enumerate(m.cexp):
            if k:
                v = point.get(chart.coords[i].name)
                if v is None:
                    raise EvaluationError(f"no value for coordinate "
                                          f"{chart.coords[i].name!r}")
                val *= Fraction(v) ** k
        total += val
    return total

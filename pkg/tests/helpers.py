"""Shared generators and oracles for the test suite (all seeded, no global
randomness)."""

from __future__ import annotations

import random
from fractions import Fraction

from graded_darboux import chart, coord, diff, gmul, one, zero
from graded_darboux.grexpr.chart import ChartSpec, CoordinateDecl, EVEN, ODD
from graded_darboux.grexpr.expr import GradedExpr
from graded_darboux.cartan import VectorField


def random_chart(rng: random.Random, max_even=4, max_odd=3,
                 weights=(-2, -1, 0, 1, 2)) -> ChartSpec:
    ne = rng.randint(1, max_even)
    no = rng.randint(0, max_odd)
    decls = []
    for i in range(ne):
        decls.append(CoordinateDecl(f"x{i}", EVEN, Fraction(rng.choice(weights))))
    for i in range(no):
        decls.append(CoordinateDecl(f"t{i}", ODD, Fraction(rng.choice(weights))))
    return ChartSpec(tuple(decls))


def random_monomial(c: ChartSpec, rng: random.Random, max_deg=3,
                    form_degree=None) -> GradedExpr:
    """A random nonzero monomial: coefficient * coordinate word * diff word."""
    e = one(c) * Fraction(rng.randint(1, 4), rng.randint(1, 3)) * rng.choice([1, -1])
    deg = 0
    for i, cd in enumerate(c.coords):
        if cd.parity == EVEN:
            k = rng.randint(0, 2)
            if deg + k > max_deg:
                k = 0
        else:
            k = rng.randint(0, 1)
        if k:
            deg += k
            e = gmul(e, coord(c, cd.name) ** k)
    if form_degree:
        names = list(c.names)
        rng.shuffle(names)
        used = 0
        for name in names:
            if used == form_degree:
                break
            e = gmul(e, diff(c, name))
            used += 1
        if e.is_zero():
            return random_monomial(c, rng, max_deg, form_degree)
    return e


def random_expr(c: ChartSpec, rng: random.Random, n_terms=3, max_deg=3,
                form_degree=0) -> GradedExpr:
    out = zero(c)
    for _ in range(n_terms):
        out = out + random_monomial(c, rng, max_deg, form_degree)
    return out


def random_even_field(c: ChartSpec, rng: random.Random, max_deg=2,
                      n_terms=1) -> VectorField:
    coeffs = []
    for i, cd in enumerate(c.coords):
        if rng.random() < 0.4:
            coeffs.append(zero(c))
            continue
        acc = zero(c)
        for _ in range(n_terms):
            m = random_monomial(c, rng, max_deg)
            if m.parity() == cd.parity:
                acc = acc + m
        coeffs.append(acc)
    return VectorField(c, EVEN, tuple(coeffs))


def random_field(c: ChartSpec, rng: random.Random, parity=EVEN,
                 max_deg=2) -> VectorField:
    coeffs = []
    for i, cd in enumerate(c.coords):
        want = (parity + cd.parity) % 2
        acc = zero(c)
        for _ in range(3):
            if rng.random() < 0.5:
                continue
            m = random_monomial(c, rng, max_deg)
            if m.parity() == want:
                acc = acc + m
        coeffs.append(acc)
    return VectorField(c, parity, tuple(coeffs))


# -- independent Koszul-sign oracle ------------------------------------------------


def generator_bidegree(kind: str, parity: int):
    # kind 'c' = coordinate, 'd' = differential
    if kind == "c":
        return (0, parity)
    return (1, parity)


def brute_force_reorder(word, c: ChartSpec):
    """Bubble-sort a generator word into canonical order, tracking the sign.

    word: list of ('c'|'d', index).  Returns (sign, sorted word) or None when
    a square-zero generator repeats.
    """
    word = list(word)
    sign = 1
    changed = True
    while changed:
        changed = False
        for i in range(len(word) - 1):
            a, b = word[i], word[i + 1]
            pos_a = (0 if a[0] == "c" else 1, a[1])
            pos_b = (0 if b[0] == "c" else 1, b[1])
            if pos_a > pos_b:
                pa, sa = generator_bidegree(a[0], c.parity(a[1]))
                pb, sb = generator_bidegree(b[0], c.parity(b[1]))
                if (pa * pb + sa * sb) % 2:
                    sign = -sign
                word[i], word[i + 1] = b, a
                changed = True
    # square-zero collisions
    for i in range(len(word) - 1):
        if word[i] == word[i + 1]:
            kind, idx = word[i]
            if kind == "c" and c.parity(idx) == ODD:
                return None
            if kind == "d" and c.parity(idx) == EVEN:
                return None
    return sign, word


def word_to_expr(word, c: ChartSpec) -> GradedExpr:
    e = one(c)
    for kind, idx in word:
        name = c.coords[idx].name
        e = gmul(e, coord(c, name) if kind == "c" else diff(c, name))
    return e

"""Brute-force oracles built on sympy, independent of the cmodlab linear algebra.

They read only the raw input data (relation coefficients, multiplication
table) and recompute lengths with integer Smith forms and rational null spaces.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form


def vp(n: int, p: int) -> int:
    n = abs(int(n))
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _integer_rows(rows: list[list[Fraction]], p: int) -> list[list[int]]:
    """Clear denominators row by row; they must be prime to p (units in O)."""
    out = []
    for row in rows:
        den = lcm(*(Fraction(x).denominator for x in row)) if row else 1
        if den % p == 0:
            raise ValueError("entry outside Z_(p)")
        out.append([int(Fraction(x) * den) for x in row])
    return out


def torsion_length(rows: list[list[Fraction]], p: int) -> int:
    """Length of the p-torsion of the cokernel of an integral matrix over Z_(p)."""
    rows = [r for r in _integer_rows(rows, p) if any(r)]
    if not rows:
        return 0
    snf = smith_normal_form(Matrix(rows), domain=ZZ)
    return sum(vp(snf[i, i], p) for i in range(min(snf.shape)) if snf[i, i] != 0)


def _linear_coefficients(f, names) -> list[Fraction]:
    out = []
    for v in names:
        m = tuple(1 if w == v else 0 for w in f.vars)
        out.append(Fraction(f.terms.get(m, 0)))
    return out


def phi_oracle(algebra) -> int:
    """Torsion length of the cotangent space from the raw presentation.

    Every variable is kept, and each iota image contributes the relation
    ``t - iota(t)``, so no elimination of variables is shared with the library.
    """
    names = tuple(algebra.lambda_vars) + tuple(algebra.fiber_vars)
    rows = []
    for rel in algebra.relations:
        coeffs = dict(zip(rel.vars, _linear_coefficients(rel, rel.vars)))
        rows.append([coeffs.get(v, Fraction(0)) for v in names])
    for t, img in algebra.lambda_images.items():
        coeffs = dict(zip(img.vars, _linear_coefficients(img, img.vars)))
        rows.append([(1 if v == t else 0) - coeffs.get(v, Fraction(0)) for v in names])
    return torsion_length(rows, algebra.p)


def _fiber_table(structure):
    """Multiplication table at t = 0 as nested lists of Fractions."""
    r = len(structure.labels)
    return [[[Fraction(structure.table[i][j][k].constant_term()) for k in range(r)] for j in range(r)]
            for i in range(r)]


def psi_eta_oracle_c0(structure) -> tuple[int, int]:
    """``(Psi length, eta valuation)`` of ``A`` itself at the fiber, from first principles.

    ``Psi(A_0) = O / lambda(A_0[p])`` where ``A_0[p]`` is the annihilator of
    the augmentation ideal.  Valid when that annihilator has rank one.
    """
    p = structure.p
    table = _fiber_table(structure)
    aug = [Fraction(a) for a in structure.aug]
    r = len(aug)
    # p_0 is spanned by e_i - aug_i for i >= 1; stack their multiplication matrices
    rows = []
    for i in range(1, r):
        for k in range(r):
            rows.append([table[i][j][k] - (aug[i] if j == k else 0) for j in range(r)])
    null = Matrix(rows).nullspace() if rows else [Matrix.eye(r)[:, 0]]
    if len(null) != 1:
        raise ValueError("annihilator of the augmentation ideal does not have rank one")
    w = [Fraction(str(x)) for x in null[0]]
    den = lcm(*(x.denominator for x in w))
    ints = [int(x * den) for x in w]
    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]  # primitive: generates the saturated line
    value = sum(a * x for a, x in zip(aug, ints))
    v = vp(Fraction(value).numerator, p) - vp(Fraction(value).denominator, p) if value else None
    return v, v


def fiber_product_closed_form(exponents) -> dict:
    return {"phi": sum(exponents), "psi": max(exponents), "defect": sum(exponents) - max(exponents)}

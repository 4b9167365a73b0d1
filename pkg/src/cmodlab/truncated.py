"""Truncated cross-check solvers for codimension one.

Both solvers work in ``A/(p^N, t^D)`` with ``A`` given by a Lambda-structure
over ``O[[t]]``.  Homomorphisms are unknown Lambda-polynomial matrices cut
off below ``t^D``; linear conditions are solved over ``Z/p^N``.

* :func:`ext1_estimate` uses ``Ext^1_A(O, M) = coker(M -> Hom_A(p, M))``.
  Every ``phi`` in ``Hom_A(p, M)`` is sent to ``phi(q)`` modulo ``pM``, where
  ``q`` lifts a generator of the free part of ``p/p^2``.
* :func:`colon_estimate` computes ``(M/fM)[p]`` for one element ``f`` and
  maps it to the torsion-free quotient of ``M/pM``.  This is the congruence
  map of the codimension-zero quotient ``A/f``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import modp
from .algebra import LambdaModule, LambdaStructure, TruncationContext
from .dvr import (
    OMatrix,
    module_from_presentation,
    quotient_projection,
    rank_over_fraction_field,
    saturation_coordinates,
    smith_normal_form,
)
from .errors import InconsistentStructure, InvariantViolation, NotRegularCase, NotRegularElement, PrecisionExhausted
from .poly import Poly


@dataclass(frozen=True)
class SweepRow:
    N: int
    D: int
    length: int
    capped: bool


@dataclass(frozen=True)
class SweepResult:
    length: int | None
    stabilized: bool
    rows: tuple[SweepRow, ...]

    def __iter__(self):
        yield self.length
        yield self.stabilized


def sweep(estimator: Callable[[int, int], tuple[int, bool]], ctx: TruncationContext | None = None,
          step: int = 4, max_escalations: int = 3) -> SweepResult:
    """Raise precision until two successive uncapped estimates agree."""
    ctx = ctx or TruncationContext()
    rows: list[SweepRow] = []
    N, D = ctx.N, ctx.D
    for _ in range(max_escalations + 1):
        length, capped = estimator(N, D)
        row = SweepRow(N, D, length, capped)
        if rows and not capped and not rows[-1].capped and rows[-1].length == length:
            rows.append(row)
            return SweepResult(length, True, tuple(rows))
        rows.append(row)
        N, D = N + step, D + step
    exc = PrecisionExhausted(
        f"no agreement between successive precisions after {max_escalations} escalations"
    )
    exc.result = SweepResult(None, False, tuple(rows))
    raise exc


def _need_c1(L: LambdaStructure) -> str:
    if L.c != 1:
        raise NotRegularCase(f"truncated solvers need c = 1, got c = {L.c}")
    return L.lambda_vars[0]


def _coeffs(f: Poly, D: int) -> list[Fraction]:
    return [f.coefficient((d,)) for d in range(D)]


def _series_blocks(mat, D: int, q: int) -> list[np.ndarray]:
    """Split a matrix of t-polynomials into its coefficient matrices mod q."""
    rows, cols = len(mat), len(mat[0]) if mat else 0
    out = []
    for d in range(D):
        out.append(modp.as_mod_array([[x.coefficient((d,)) for x in row] for row in mat], q, (rows, cols)))
    return out


def _divide_by_t(f: Poly) -> Poly:
    if f.constant_term() != 0:
        raise InconsistentStructure("element expected in tA has non-zero constant term")
    return Poly(f.vars, {(m[0] - 1,): c for m, c in f.terms.items()})


def tf_projection(L: LambdaStructure, M: LambdaModule) -> OMatrix:
    """Rows give coordinates on the torsion-free quotient of ``M_0/p_0 M_0``."""
    M0 = M.fiber()
    s = M0.rank
    cols = []
    for i in range(1, L.rank):
        shifted = M0.actions[i]
        for a in range(s):
            cols.append([shifted[b, a] - (L.aug[i] if a == b else 0) for b in range(s)])
    if not cols:
        return OMatrix.identity(L.p, s)
    gens = OMatrix.from_rows(L.p, [[col[b] for col in cols] for b in range(s)], len(cols))
    return quotient_projection(gens)


def cotangent_generator(L: LambdaStructure) -> list[Fraction]:
    """Constant Lambda-coordinates of a lift of the free generator of ``p/p^2``.

    Coordinates refer to the Lambda-basis ``t*e_1, e_i - aug_i e_1`` of ``p``.
    Computed inside ``A/t^2 A``, which already contains ``p^2 + t^2 A``.
    """
    _need_c1(L)
    r, p, aug = L.rank, L.p, L.aug
    t = L.lambda_vars[0]
    one = Poly.const(L.lambda_vars, 1)
    tv = Poly.var(L.lambda_vars, t)
    gens = [L.basis_vector(i, one) for i in range(r)]
    basis = []
    for i in range(1, r):
        basis.append(tuple(a - (aug[i] * b) for a, b in zip(gens[i], gens[0])))
    for i in range(r):
        basis.append(L.basis_vector(i, tv))

    def flat(vec) -> list[Fraction]:
        return [x.coefficient((0,)) for x in vec] + [x.coefficient((1,)) for x in vec]

    B = OMatrix.from_rows(p, [[flat(b)[k] for b in basis] for k in range(2 * r)], len(basis))
    left = saturation_coordinates(B)
    rels = []
    for i in range(len(basis)):
        for j in range(i, len(basis)):
            prod = L.mult(basis[i], basis[j])
            v = OMatrix.from_rows(p, [[x] for x in flat(prod)], 1)
            rels.append([row[0] for row in (left @ v).entries])
    R = OMatrix.from_rows(p, rels, len(basis))
    snf = smith_normal_form(R, rows=False)
    if len(basis) - snf.rank != 1:
        raise InvariantViolation("p/p^2 does not have free rank one")
    x = snf.V_inv.entries[snf.rank]
    alpha = x[: r - 1]
    beta = x[r - 1 :]
    c1 = beta[0] + sum((aug[i] * beta[i] for i in range(1, r)), Fraction(0))
    return [c1] + list(alpha)


def ext1_estimate(L: LambdaStructure, M: LambdaModule, generators, N: int, D: int) -> tuple[int, bool]:
    """Length of coker(Ext^1(O, M) -> F^1(M/pM)) computed modulo ``(p^N, t^D)``.

    ``generators`` are Lambda-vectors generating ``A`` as a Lambda-algebra.
    """
    t = _need_c1(L)
    p, r, s = L.p, L.rank, M.rank
    q = p ** N
    Lw = dataclasses.replace(L, degree=max(L.degree, D + 2))
    aug = L.aug
    tv = Poly.var(L.lambda_vars, t)
    b = [Lw.basis_vector(0, tv)]
    for i in range(1, r):
        b.append(tuple(x - (aug[i] if k == 0 else 0) for k, x in enumerate(Lw.basis_vector(i))))

    def coords(vec):
        first = vec[0] + sum((aug[i] * vec[i] for i in range(1, r)), Poly(L.lambda_vars))
        return [_divide_by_t(first)] + [vec[i] for i in range(1, r)]

    n = s * r
    blocks = []
    for g in generators:
        R = M.action_of(g, D)
        cols = [coords(Lw.mult(g, bj)) for bj in b]
        S = tuple(tuple(cols[j][i] for j in range(r)) for i in range(r))
        Rb = _series_blocks(R, D, q)
        Sb = _series_blocks(S, D, q)
        Ir, Is = modp.identity(r), modp.identity(s)
        terms = [(np.kron(Ir, Rb[a]) - np.kron(Sb[a].T, Is)) % q for a in range(D)]
        E = modp.zeros(D * n, D * n)
        for d in range(D):
            for k in range(d + 1):
                E[d * n : (d + 1) * n, k * n : (k + 1) * n] = terms[d - k]
        blocks.append(E)
    E = np.concatenate(blocks, axis=0) if blocks else modp.zeros(0, D * n)
    K = modp.kernel_generators(E, p, N)
    P = tf_projection(L, M)
    f = P.nrows
    Pm = modp.as_mod_array(P.rows(), q, (f, s))
    cq = cotangent_generator(L)
    Ev = modp.zeros(f, D * n)
    for j in range(r):
        Ev[:, j * s : (j + 1) * s] = Pm * modp.to_mod(cq[j], q) % q
    image = Ev.dot(K) % q
    exps = modp.cokernel_exponents(image, p, N)
    return sum(exps), any(e >= N for e in exps)


def lambda_generators(L: LambdaStructure, fiber_vars) -> list:
    if fiber_vars:
        return [L.var_vector(x) for x in fiber_vars]
    return [L.basis_vector(i) for i in range(1, L.rank)]


def ext1_truncated(L: LambdaStructure, M: LambdaModule, fiber_vars=(), ctx: TruncationContext | None = None,
                   max_escalations: int = 3) -> SweepResult:
    _need_c1(L)
    gens = lambda_generators(L, fiber_vars)
    return sweep(lambda N, D: ext1_estimate(L, M, gens, N, D), ctx, max_escalations=max_escalations)


def check_regular_element(L: LambdaStructure, M: LambdaModule, f_vec) -> None:
    """``f`` is M-regular iff its action on the Lambda-free module has non-zero determinant."""
    act = M.action_of(f_vec)
    t = L.lambda_vars[0] if L.lambda_vars else None
    for val in range(1, 6):
        rows = [[x.evaluate({t: Fraction(val)} if t else {}, Fraction(1)) for x in row] for row in act]
        if rank_over_fraction_field(OMatrix.from_rows(L.p, rows, len(rows))) == len(rows):
            return
    raise NotRegularElement("element acts on M with vanishing determinant")


def colon_estimate(L: LambdaStructure, M: LambdaModule, f_vec, ideal_gens, N: int, D: int) -> tuple[int, bool]:
    """Length of coker((M/fM)[p] -> tf(M/pM)) computed modulo ``(p^N, t^D)``."""
    _need_c1(L)
    p, s = L.p, M.rank
    q = p ** N
    F = _series_blocks(M.action_of(f_vec, D), D, q)
    n = s * D
    k = len(ideal_gens)
    blocks = []
    for gi, g in enumerate(ideal_gens):
        R = _series_blocks(M.action_of(g, D), D, q)
        E = modp.zeros(n, n * (1 + k))
        for d in range(D):
            for b in range(d + 1):
                E[d * s : (d + 1) * s, b * s : (b + 1) * s] = R[d - b]
                off = n * (1 + gi)
                E[d * s : (d + 1) * s, off + b * s : off + (b + 1) * s] = (-F[d - b]) % q
        blocks.append(E)
    E = np.concatenate(blocks, axis=0)
    K = modp.kernel_generators(E, p, N)
    P = tf_projection(L, M)
    Ev = modp.zeros(P.nrows, n * (1 + k))
    Ev[:, :s] = modp.as_mod_array(P.rows(), q, (P.nrows, s))
    image = Ev.dot(K) % q
    exps = modp.cokernel_exponents(image, p, N)
    return sum(exps), any(e >= N for e in exps)


def colon_truncated(L: LambdaStructure, M: LambdaModule, f: Poly, presentation_vars,
                    ctx: TruncationContext | None = None, max_escalations: int = 3) -> SweepResult:
    """Congruence module of ``M/fM`` over ``A/f`` (codimension one to zero)."""
    _need_c1(L)
    Lw = dataclasses.replace(L, degree=max(L.degree, (ctx or TruncationContext()).D + 4 * max_escalations + 2))
    f_vec = Lw.element(f)
    check_regular_element(L, M, f_vec)
    gens = [Lw.element(Poly.var(presentation_vars, v)) for v in presentation_vars]
    return sweep(lambda N, D: colon_estimate(Lw, M, f_vec, gens, N, D), ctx, max_escalations=max_escalations)

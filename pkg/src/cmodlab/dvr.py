"""Exact arithmetic over O = Z_(p) and normal forms of finitely generated O-modules.

Elements of O are stored as :class:`fractions.Fraction` values whose
denominators are prime to ``p``.  :class:`DvrScalar` is the user-facing
``p^e * unit`` view of such a value.  Matrices are small and dense; the
Smith normal form below pivots on an entry of minimal valuation, which over
a local PID makes every elimination step exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import IllFormedMap

INF = math.inf
_ZERO = Fraction(0)


def as_fraction(x) -> Fraction:
    if type(x) is Fraction or isinstance(x, Fraction):
        return x
    if isinstance(x, DvrScalar):
        return x.value
    return Fraction(x)


def int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation_of(x, p: int):
    """p-adic valuation of a rational number; ``inf`` for zero."""
    x = as_fraction(x)
    if x == 0:
        return INF
    return int_valuation(abs(x.numerator), p) - int_valuation(x.denominator, p)


def is_integral(x, p: int) -> bool:
    return as_fraction(x).denominator % p != 0


@dataclass(frozen=True)
class DvrScalar:
    """An element ``p**exponent * unit`` of O; zero has ``exponent=None``."""

    p: int
    exponent: int | None
    unit: Fraction = Fraction(0)

    def __post_init__(self):
        if self.exponent is None:
            if self.unit != 0:
                raise ValueError("zero must carry unit 0")
            return
        u = self.unit
        if self.exponent < 0:
            raise ValueError("exponent must be non-negative")
        if u == 0 or u.numerator % self.p == 0 or u.denominator % self.p == 0:
            raise ValueError(f"{u} is not a unit at p={self.p}")

    @classmethod
    def from_value(cls, p: int, x) -> "DvrScalar":
        x = as_fraction(x)
        if x == 0:
            return cls(p, None)
        v = valuation_of(x, p)
        if v < 0:
            raise ValueError(f"{x} is not in Z_({p})")
        return cls(p, v, x / Fraction(p) ** v)

    @property
    def value(self) -> Fraction:
        if self.exponent is None:
            return Fraction(0)
        return self.unit * self.p ** self.exponent

    def is_zero(self) -> bool:
        return self.exponent is None

    def valuation(self):
        return INF if self.exponent is None else self.exponent

    def _coerce(self, other) -> "DvrScalar":
        if isinstance(other, DvrScalar):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        return DvrScalar.from_value(self.p, other)

    def __add__(self, other):
        return DvrScalar.from_value(self.p, self.value + self._coerce(other).value)

    __radd__ = __add__

    def __neg__(self):
        return DvrScalar.from_value(self.p, -self.value)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        return DvrScalar.from_value(self.p, self.value * self._coerce(other).value)

    __rmul__ = __mul__

    def __repr__(self):
        if self.exponent is None:
            return f"DvrScalar(p={self.p}, 0)"
        return f"DvrScalar(p={self.p}, {self.p}^{self.exponent}*{self.unit})"


def valuation(s):
    """Valuation of a :class:`DvrScalar`."""
    return s.valuation()


@dataclass(frozen=True)
class OMatrix:
    """Dense matrix over O with exact rational entries."""

    p: int
    entries: tuple
    ncols: int

    @classmethod
    def from_rows(cls, p: int, rows: Iterable[Sequence], ncols: int | None = None) -> "OMatrix":
        rows = tuple(tuple(as_fraction(x) for x in r) for r in rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != ncols:
                raise ValueError("ragged matrix")
        return cls(p, rows, ncols)

    @classmethod
    def identity(cls, p: int, n: int) -> "OMatrix":
        return cls.from_rows(p, [[int(i == j) for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, p: int, m: int, n: int) -> "OMatrix":
        return cls.from_rows(p, [[0] * n for _ in range(m)], n)

    @classmethod
    def diagonal(cls, p: int, values: Sequence, ncols: int | None = None) -> "OMatrix":
        n = len(values) if ncols is None else ncols
        return cls.from_rows(p, [[values[i] if i == j else 0 for j in range(n)] for i in range(len(values))], n)

    @property
    def nrows(self) -> int:
        return len(self.entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def scalar(self, i: int, j: int) -> DvrScalar:
        return DvrScalar.from_value(self.p, self.entries[i][j])

    def rows(self) -> list[list[Fraction]]:
        return [list(r) for r in self.entries]

    def column(self, j: int) -> list[Fraction]:
        return [r[j] for r in self.entries]

    def transpose(self) -> "OMatrix":
        return OMatrix.from_rows(self.p, [self.column(j) for j in range(self.ncols)], self.nrows)

    T = property(transpose)

    def __matmul__(self, other: "OMatrix") -> "OMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        n = other.ncols
        integer = self._integer() and other._integer()
        # sparse rows; plain ints when possible since Fraction arithmetic dominates otherwise
        conv = int if integer else (lambda x: x)
        orows = [[(j, conv(b)) for j, b in enumerate(orow) if b] for orow in other.entries]
        out = []
        for r in self.entries:
            acc = [0] * n
            for a, orow in zip(r, orows):
                if a and orow:
                    a = conv(a)
                    for j, b in orow:
                        acc[j] += a * b
            out.append(tuple(Fraction(x) for x in acc) if integer else tuple(as_fraction(x) for x in acc))
        return OMatrix(self.p, tuple(out), n)

    def _integer(self) -> bool:
        return all(x.denominator == 1 for r in self.entries for x in r)

    def vstack(self, other: "OMatrix") -> "OMatrix":
        if self.ncols != other.ncols:
            raise ValueError("column mismatch")
        return OMatrix(self.p, self.entries + other.entries, self.ncols)

    def select_columns(self, idx: Sequence[int]) -> "OMatrix":
        return OMatrix.from_rows(self.p, [[r[j] for j in idx] for r in self.entries], len(idx))

    def select_rows(self, idx: Sequence[int]) -> "OMatrix":
        return OMatrix(self.p, tuple(self.entries[i] for i in idx), self.ncols)

    def is_integral(self) -> bool:
        return all(x.denominator % self.p != 0 for r in self.entries for x in r)

    def min_valuation(self):
        return min((valuation_of(x, self.p) for r in self.entries for x in r), default=INF)


@dataclass(frozen=True)
class SmithForm:
    """``U @ m @ V`` is diagonal with entries ``p**exponents[i]``."""

    exponents: tuple[int, ...]
    U: OMatrix
    V: OMatrix
    U_inv: OMatrix
    V_inv: OMatrix

    @property
    def rank(self) -> int:
        return len(self.exponents)

    def __iter__(self):
        # unpacks as (pivot_exponents, (U, V))
        yield list(self.exponents)
        yield (self.U, self.V)


def smith_normal_form(m: OMatrix, rows: bool = True, cols: bool = True) -> SmithForm:
    """Smith form over O; ``rows``/``cols`` switch off tracking of ``U``/``V`` and their inverses."""
    p = m.p
    if not m.is_integral():
        raise ValueError("matrix has entries outside O")
    nr, nc = m.shape
    A = m.rows()
    U = [[Fraction(int(i == j)) for j in range(nr)] for i in range(nr)] if rows else []
    Ui = [row[:] for row in U]
    V = [[Fraction(int(i == j)) for j in range(nc)] for i in range(nc)] if cols else []
    Vi = [row[:] for row in V]
    exps: list[int] = []
    for k in range(min(nr, nc)):
        best = None
        for i in range(k, nr):
            row = A[i]
            for j in range(k, nc):
                x = row[j]
                if x:
                    v = valuation_of(x, p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, pi, pj = best
        if pi != k:
            A[k], A[pi] = A[pi], A[k]
            if rows:
                U[k], U[pi] = U[pi], U[k]
                for r in Ui:
                    r[k], r[pi] = r[pi], r[k]
        if pj != k:
            for r in A:
                r[k], r[pj] = r[pj], r[k]
            if cols:
                for r in V:
                    r[k], r[pj] = r[pj], r[k]
                Vi[k], Vi[pj] = Vi[pj], Vi[k]
        piv = A[k][k]
        unit = piv / Fraction(p) ** v
        if unit != 1:
            A[k] = [x / unit for x in A[k]]
            if rows:
                U[k] = [x / unit for x in U[k]]
                for r in Ui:
                    r[k] *= unit
            piv = A[k][k]
        rowk = A[k]
        for i in range(k + 1, nr):
            if A[i][k]:
                f = A[i][k] / piv
                A[i] = [a - f * b if b else a for a, b in zip(A[i], rowk)]
                if rows:
                    U[i] = [a - f * b if b else a for a, b in zip(U[i], U[k])]
                    for r in Ui:
                        if r[i]:
                            r[k] += f * r[i]
        for j in range(k + 1, nc):
            if rowk[j]:
                f = rowk[j] / piv
                # rows below k are already zero in column k
                rowk[j] -= f * rowk[k]
                if cols:
                    for r in V:
                        if r[k]:
                            r[j] -= f * r[k]
                    Vi[k] = [a + f * b if b else a for a, b in zip(Vi[k], Vi[j])]
        exps.append(v)
    return SmithForm(
        tuple(exps),
        OMatrix.from_rows(p, U, nr) if rows else None,
        OMatrix.from_rows(p, V, nc) if cols else None,
        OMatrix.from_rows(p, Ui, nr) if rows else None,
        OMatrix.from_rows(p, Vi, nc) if cols else None,
    )


def rank_over_fraction_field(m: OMatrix) -> int:
    """Rank over E; uses plain Gaussian elimination so no integrality is required."""
    A = m.rows()
    r = 0
    for j in range(m.ncols):
        piv = next((i for i in range(r, len(A)) if A[i][j]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, len(A)):
            if A[i][j]:
                f = A[i][j] / A[r][j]
                A[i] = [a - f * b if b else a for a, b in zip(A[i], A[r])]
        r += 1
    return r


def kernel_basis(m: OMatrix) -> OMatrix:
    """Columns form an O-basis of ``{x in O^n : m x = 0}``."""
    snf = smith_normal_form(m, rows=False)
    return snf.V.select_columns(range(snf.rank, m.ncols))


def left_kernel_basis(m: OMatrix) -> OMatrix:
    """Rows form an O-basis of ``{y in O^r : y m = 0}``."""
    return kernel_basis(m.transpose()).transpose()


def quotient_projection(gens: OMatrix) -> OMatrix:
    """For ``W`` spanned by the columns of ``gens`` (inside O^s), return ``P``
    with rows giving coordinates on ``O^s / sat(W)``, i.e. the torsion-free
    quotient of ``O^s / W``."""
    snf = smith_normal_form(gens, cols=False)
    return snf.U.select_rows(range(snf.rank, gens.nrows))


def saturation_coordinates(basis: OMatrix):
    """Left inverse of a matrix whose columns are a saturated O-basis."""
    snf = smith_normal_form(basis)
    if snf.rank != basis.ncols or any(snf.exponents):
        raise ValueError("columns are not a saturated basis")
    # basis = U_inv @ [I;0] @ V_inv, so V @ U[:k] is a left inverse
    return snf.V @ snf.U.select_rows(range(snf.rank))


def det_valuation(m: OMatrix):
    if m.nrows != m.ncols:
        raise ValueError("det_valuation needs a square matrix")
    snf = smith_normal_form(m, rows=False, cols=False)
    if snf.rank < m.nrows:
        return INF
    return sum(snf.exponents)


@dataclass(frozen=True)
class FgOModule:
    """``O^free_rank`` plus ``O/p^e`` for each torsion exponent."""

    free_rank: int = 0
    torsion_exponents: tuple[int, ...] = field(default=())

    def __post_init__(self):
        exps = tuple(sorted(int(e) for e in self.torsion_exponents))
        if any(e < 1 for e in exps):
            raise ValueError("torsion exponents must be >= 1")
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        object.__setattr__(self, "torsion_exponents", exps)

    def length(self):
        """Length of the torsion part (the full length when the module is torsion)."""
        return sum(self.torsion_exponents)

    def rank(self) -> int:
        return self.free_rank

    def torsion_part(self) -> "FgOModule":
        return FgOModule(0, self.torsion_exponents)

    def torsion_free_quotient(self) -> "FgOModule":
        return FgOModule(self.free_rank)

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion_exponents

    def is_cyclic(self) -> bool:
        return self.free_rank + len(self.torsion_exponents) <= 1

    @property
    def ngens(self) -> int:
        return len(self.torsion_exponents) + self.free_rank

    def presentation(self, p: int) -> OMatrix:
        """Relations on generators ordered torsion first, then free."""
        n = self.ngens
        return OMatrix.diagonal(p, [Fraction(p) ** e for e in self.torsion_exponents], n)

    def to_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion_exponents)}

    def __str__(self):
        parts = [f"O/p^{e}" if e > 1 else "O/p" for e in self.torsion_exponents]
        if self.free_rank:
            parts.insert(0, "O" if self.free_rank == 1 else f"O^{self.free_rank}")
        return " + ".join(parts) if parts else "0"


def module_from_presentation(rels: OMatrix) -> FgOModule:
    """Cokernel of ``rels``: rows are relations among ``rels.ncols`` generators."""
    snf = smith_normal_form(rels, rows=False, cols=False)
    return FgOModule(rels.ncols - snf.rank, tuple(e for e in snf.exponents if e > 0))


def in_row_span(v: Sequence, rels: OMatrix) -> bool:
    """Is the row vector ``v`` an O-combination of the rows of ``rels``?"""
    if rels.nrows == 0:
        return all(as_fraction(x) == 0 for x in v)
    snf = smith_normal_form(rels, rows=False)
    y = (OMatrix.from_rows(rels.p, [v], rels.ncols) @ snf.V).entries[0]
    for i, x in enumerate(y):
        if i < snf.rank:
            if x and valuation_of(x, rels.p) < snf.exponents[i]:
                return False
        elif x:
            return False
    return True


@dataclass(frozen=True)
class OModuleMap:
    """Map between presented O-modules.

    ``source`` and ``target`` are either :class:`FgOModule` values (using
    their canonical generators) or relation matrices.  Row ``i`` of ``matrix``
    is the image of source generator ``i`` in target generators.
    """

    source: object
    target: object
    matrix: OMatrix

    def _rels(self, side) -> OMatrix:
        if isinstance(side, FgOModule):
            return side.presentation(self.matrix.p)
        return side

    @property
    def source_relations(self) -> OMatrix:
        return self._rels(self.source)

    @property
    def target_relations(self) -> OMatrix:
        return self._rels(self.target)

    def check(self) -> None:
        src, tgt = self.source_relations, self.target_relations
        if src.ncols != self.matrix.nrows or tgt.ncols != self.matrix.ncols:
            raise IllFormedMap("matrix shape does not match generator counts")
        if src.nrows == 0:
            return
        images = src @ self.matrix
        for i, row in enumerate(images.entries):
            if not in_row_span(row, tgt):
                raise IllFormedMap(f"relation {i} of the source does not map into the target relations")


def map_cokernel(f: OModuleMap) -> FgOModule:
    f.check()
    return module_from_presentation(f.target_relations.vstack(f.matrix))

"""Prime-field arithmetic and exact linear algebra over F_q.

Two layers live here. ``PrimeField``/``FieldElement`` are the checked scalar
types used at API boundaries and in tests. The protocol engine itself carries
symbols as plain integers (or numpy integer arrays when batching) reduced
modulo q, and the matrix helpers below work on those.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np


class FieldMismatch(ValueError):
    """Raised when elements of two different fields are combined."""


class DivisionByZero(ZeroDivisionError):
    """Raised when inverting the zero element."""


def is_prime(q: int) -> bool:
    """Trial division; q is tiny in every use here."""
    if q < 2:
        return False
    d = 2
    while d * d <= q:
        if q % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class PrimeField:
    """The field F_q for a prime q."""

    q: int

    def __post_init__(self) -> None:
        if not isinstance(self.q, int) or isinstance(self.q, bool):
            raise TypeError(f"field order must be an int, got {self.q!r}")
        if not is_prime(self.q):
            raise ValueError(f"field order {self.q} is not prime")

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.q, self)

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(0, self)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(1, self)

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(v, self) for v in range(self.q)]

    def __repr__(self) -> str:
        return f"GF({self.q})"


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.field.q:
            raise ValueError(f"{self.value} is not a reduced element of {self.field}")

    def _coerce(self, other: object) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatch(f"cannot mix {self.field} and {other.field}")
            return other
        if isinstance(other, int) and not isinstance(other, bool):
            return self.field(other)
        raise TypeError(f"unsupported operand {other!r}")

    def __add__(self, other: object) -> "FieldElement":
        return fe_add(self, self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other: object) -> "FieldElement":
        return fe_sub(self, self._coerce(other))

    def __rsub__(self, other: object) -> "FieldElement":
        return fe_sub(self._coerce(other), self)

    def __mul__(self, other: object) -> "FieldElement":
        return fe_mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self) -> "FieldElement":
        return fe_neg(self)

    def __truediv__(self, other: object) -> "FieldElement":
        return fe_mul(self, fe_inv(self._coerce(other)))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.q})"


def _same_field(a: FieldElement, b: FieldElement) -> PrimeField:
    if a.field != b.field:
        raise FieldMismatch(f"cannot mix {a.field} and {b.field}")
    return a.field


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    f = _same_field(a, b)
    return FieldElement((a.value + b.value) % f.q, f)


def fe_neg(a: FieldElement) -> FieldElement:
    return FieldElement((-a.value) % a.field.q, a.field)


def fe_sub(a: FieldElement, b: FieldElement) -> FieldElement:
    f = _same_field(a, b)
    return FieldElement((a.value - b.value) % f.q, f)


def fe_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    f = _same_field(a, b)
    return FieldElement((a.value * b.value) % f.q, f)


def fe_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise DivisionByZero(f"0 has no inverse in {a.field}")
    return FieldElement(pow(a.value, -1, a.field.q), a.field)


def fe_enumerate(field: PrimeField) -> list[FieldElement]:
    """All q elements in ascending order of value."""
    return field.elements()


# ---------------------------------------------------------------------------
# matrices over F_q (numpy int64, entries reduced mod q)


def as_matrix(rows: Iterable[Iterable[int]], q: int, ncols: Optional[int] = None) -> np.ndarray:
    m = np.array([list(r) for r in rows], dtype=np.int64)
    if m.size == 0:
        return np.zeros((m.shape[0] if m.ndim == 2 else 0, ncols or 0), dtype=np.int64)
    return m % q


def row_reduce(m: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``m`` over F_q and its pivot columns."""
    a = np.array(m, dtype=np.int64) % q
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = (a[r] * pow(int(a[r, c]), -1, q)) % q
        others = np.nonzero(a[:, c])[0]
        for o in others:
            if o != r:
                a[o] = (a[o] - a[o, c] * a[r]) % q
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray, q: int) -> int:
    if m.size == 0:
        return 0
    return len(row_reduce(m, q)[1])


def solve(a: np.ndarray, b: np.ndarray, q: int) -> Optional[np.ndarray]:
    """One solution x of ``a @ x = b`` over F_q, or None if inconsistent."""
    a = np.array(a, dtype=np.int64) % q
    b = np.array(b, dtype=np.int64).reshape(-1) % q
    rows, cols = a.shape
    red, piv = row_reduce(np.concatenate([a, b[:, None]], axis=1), q)
    if cols in piv:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for r, c in enumerate(piv):
        x[c] = red[r, cols]
    return x


def left_null_space(a: np.ndarray, q: int) -> np.ndarray:
    """Basis (as rows) of {y : y @ a = 0} over F_q."""
    a = np.array(a, dtype=np.int64) % q
    return null_space(a.T, q)


def null_space(a: np.ndarray, q: int) -> np.ndarray:
    """Basis (as rows) of {x : a @ x = 0} over F_q."""
    a = np.array(a, dtype=np.int64) % q
    rows, cols = a.shape
    if rows == 0:
        return np.eye(cols, dtype=np.int64)
    red, piv = row_reduce(a, q)
    free = [c for c in range(cols) if c not in piv]
    basis = []
    for f in free:
        x = np.zeros(cols, dtype=np.int64)
        x[f] = 1
        for r, c in enumerate(piv):
            x[c] = (-red[r, f]) % q
        basis.append(x)
    if not basis:
        return np.zeros((0, cols), dtype=np.int64)
    return np.array(basis, dtype=np.int64)

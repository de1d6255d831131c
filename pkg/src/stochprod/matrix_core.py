"""Row-stochastic matrices, zero patterns and the scalar functionals on them.

Indices are 0-based throughout the package.
"""

from __future__ import annotations

from typing import Iterable, Sequence, Union

import numpy as np

EPS_POS = 1e-12
EPS_ROW = 1e-9
EPS_CONS = 1e-9


class StochasticMatrix:
    """Immutable dense row-stochastic matrix.

    Parameters
    ----------
    entries : array_like, shape (n, n)
        Nonnegative entries whose rows sum to one within `row_tol`.
    positive_diagonal : bool, optional
        If true, additionally require every diagonal entry to exceed `eps_pos`.
    row_tol, eps_pos : float, optional
        Validation tolerances.

    Raises
    ------
    ValueError
        If the array is not square, has negative or non-finite entries, or a
        row sum deviates from one by more than `row_tol`.
    """

    __slots__ = ("_a",)

    def __init__(
        self,
        entries,
        *,
        positive_diagonal: bool = False,
        row_tol: float = EPS_ROW,
        eps_pos: float = EPS_POS,
    ):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        if np.any(a < 0):
            raise ValueError("matrix has negative entries")
        sums = a.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > row_tol)
        if bad.size:
            raise ValueError(f"row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1")
        if positive_diagonal and np.any(np.diag(a) <= eps_pos):
            raise ValueError("diagonal is not positive")
        a.setflags(write=False)
        self._a = a

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "StochasticMatrix":
        # skips validation; caller guarantees the invariants
        obj = cls.__new__(cls)
        a = np.asarray(a, dtype=float)
        a.setflags(write=False)
        obj._a = a
        return obj

    @classmethod
    def identity(cls, n: int) -> "StochasticMatrix":
        return cls._trusted(np.eye(n))

    @classmethod
    def consensus(cls, row: Sequence[float]) -> "StochasticMatrix":
        """Rank-one matrix whose rows all equal `row`."""
        row = np.asarray(row, dtype=float)
        return cls(np.tile(row, (row.size, 1)))

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def n(self) -> int:
        return self._a.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a
        return self._a.astype(dtype)

    def __matmul__(self, other):
        if isinstance(other, StochasticMatrix):
            return multiply(self, other)
        return self._a @ np.asarray(other)

    def __repr__(self) -> str:
        return f"StochasticMatrix({self._a.tolist()!r})"

    def has_positive_diagonal(self, eps_pos: float = EPS_POS) -> bool:
        return bool(np.all(np.diag(self._a) > eps_pos))

    def tolist(self) -> list:
        return self._a.tolist()


MatrixLike = Union[StochasticMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_stochastic(a: MatrixLike) -> StochasticMatrix:
    if isinstance(a, StochasticMatrix):
        return a
    return StochasticMatrix(a)


def as_array(a) -> np.ndarray:
    if isinstance(a, StochasticMatrix):
        return a.entries
    return np.asarray(a, dtype=float)


class ZeroPattern:
    """Boolean positivity pattern (the *type*) of a nonnegative matrix."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        b = np.array(bits, dtype=bool)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"expected a square pattern, got shape {b.shape}")
        b.setflags(write=False)
        self._bits = b

    @classmethod
    def identity(cls, n: int) -> "ZeroPattern":
        return cls(np.eye(n, dtype=bool))

    @classmethod
    def full(cls, n: int) -> "ZeroPattern":
        return cls(np.ones((n, n), dtype=bool))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def n(self) -> int:
        return self._bits.shape[0]

    @property
    def T(self) -> "ZeroPattern":
        return ZeroPattern(self._bits.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZeroPattern):
            return NotImplemented
        return self._bits.shape == other._bits.shape and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self.n, self._bits.tobytes()))

    def __le__(self, other: "ZeroPattern") -> bool:
        """Elementwise inclusion of positive bits."""
        return bool(np.all(other._bits[self._bits]))

    def __ge__(self, other: "ZeroPattern") -> bool:
        return other <= self

    def __or__(self, other: "ZeroPattern") -> "ZeroPattern":
        return ZeroPattern(self._bits | other._bits)

    def __matmul__(self, other: "ZeroPattern") -> "ZeroPattern":
        return pattern_product(self, other)

    def __repr__(self) -> str:
        rows = ["".join("1" if b else "0" for b in row) for row in self._bits]
        return f"ZeroPattern({'/'.join(rows)})"

    def count(self) -> int:
        return int(self._bits.sum())

    def has_positive_diagonal(self) -> bool:
        return bool(np.all(np.diag(self._bits)))

    def to_grid(self) -> list:
        return self._bits.astype(int).tolist()


def multiply(a: MatrixLike, b: MatrixLike) -> StochasticMatrix:
    """Product ``a @ b`` with every output row rescaled to sum to one."""
    x, y = as_array(a), as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    c = x @ y
    c /= c.sum(axis=1, keepdims=True)
    return StochasticMatrix._trusted(c)


def pattern_of(a: MatrixLike, eps_pos: float = EPS_POS) -> ZeroPattern:
    return ZeroPattern(as_array(a) > eps_pos)


def pattern_product(p: ZeroPattern, q: ZeroPattern) -> ZeroPattern:
    """Product in the boolean semiring: (i, j) is set iff some k has p(i,k) and q(k,j)."""
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: {p.n} vs {q.n}")
    prod = p.bits.astype(np.int64) @ q.bits.astype(np.int64)
    return ZeroPattern(prod > 0)


def ergodicity_coefficient(a: MatrixLike) -> float:
    """Coefficient of ergodicity ``1 - min_{i,j} sum_k min(a_ik, a_jk)``.

    Evaluated in the equivalent half-L1 form ``max_{i,j} 0.5 * sum_k |a_ik - a_jk|``,
    which is exactly zero when all rows coincide.
    """
    x = as_array(a)
    diff = np.abs(x[:, None, :] - x[None, :, :]).sum(axis=-1)
    return float(min(1.0, 0.5 * diff.max()))


def is_consensus(a: MatrixLike, tol: float = EPS_CONS) -> bool:
    """True iff all rows are pairwise equal within `tol` (max-abs)."""
    x = as_array(a)
    return bool(np.all(np.abs(x - x[0]) <= tol))


def min_plus(a: MatrixLike, eps_pos: float = EPS_POS) -> float:
    """Smallest entry exceeding `eps_pos`."""
    x = as_array(a)
    pos = x[x > eps_pos]
    if pos.size == 0:
        raise ValueError("matrix has no positive entry")
    return float(pos.min())


def block_row_sum_norm(a: MatrixLike, rows: Iterable[int], cols: Iterable[int]) -> float:
    """Row-sum norm of the sub-block ``a[rows, cols]``."""
    rows, cols = list(rows), list(cols)
    if not rows or not cols:
        raise ValueError("empty index set")
    x = as_array(a)
    return float(np.abs(x[np.ix_(rows, cols)]).sum(axis=1).max())


def column_extrema(a: MatrixLike) -> np.ndarray:
    """Per-column minimum and maximum as an ``(n, 2)`` array."""
    x = as_array(a)
    return np.stack([x.min(axis=0), x.max(axis=0)], axis=1)

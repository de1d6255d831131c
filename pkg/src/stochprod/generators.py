"""Seeded, replayable matrix-sequence generators.

Every generator is a pure function of ``(spec, t)``: the random stream for
time ``t`` is derived from ``(seed, t)`` alone, so any window can be replayed
without generating its predecessors.
"""

from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .accumulation import MatrixSequence
from .analysis import WINDOW_START, GapSchedule
from .matrix_core import StochasticMatrix

KINDS = ("random_positive_diagonal", "type_symmetric", "pattern_scheduled", "constant", "adversarial_gap")
MIXING = ("base", "decay")


def random_pattern(rng: np.random.Generator, n: int, density: float, symmetric: bool = False) -> np.ndarray:
    """Boolean pattern with a full diagonal and off-diagonal bits drawn i.i.d."""
    bits = rng.random((n, n)) < density
    if symmetric:
        bits = np.triu(bits, 1)
        bits = bits | bits.T
    np.fill_diagonal(bits, True)
    return bits


def random_stochastic_matrix(rng: np.random.Generator, pattern: np.ndarray, floor: float) -> np.ndarray:
    """Row-stochastic matrix supported exactly on `pattern`, every positive entry >= `floor`.

    Each support entry gets `floor`; the remaining row mass is split by
    normalized uniform draws.
    """
    pattern = np.asarray(pattern, dtype=bool)
    support = pattern.sum(axis=1, keepdims=True)
    if np.any(support == 0):
        raise ValueError("pattern has an empty row")
    if np.any(support * floor > 1 + 1e-12):
        raise ValueError("floor too large for the row support")
    w = rng.random(pattern.shape) * pattern
    w_sum = w.sum(axis=1, keepdims=True)
    # degenerate all-zero draw: spread evenly
    w = np.where(w_sum > 0, w / np.where(w_sum > 0, w_sum, 1), pattern / support)
    a = pattern * floor + (1.0 - support * floor) * w
    return a


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate; see the README for the JSON form.

    `delta_floor` defaults to ``1 / (2n)``. For ``adversarial_gap`` the matrix
    is the identity except at the last step of each window, where it is either
    the base matrix (``mixing="base"``) or
    ``(1 - e) I + (e / n) 11^T`` with ``e = schedule.delta ** gap``
    (``mixing="decay"``), so window ``i`` has ergodicity coefficient
    ``1 - schedule.delta ** gap(i)``.
    """

    kind: str
    n: int
    seed: int = 0
    delta_floor: Optional[float] = None
    density: float = 0.3
    matrix: Optional[Tuple[Tuple[float, ...], ...]] = None
    patterns: Optional[Tuple[Tuple[Tuple[bool, ...], ...], ...]] = None
    schedule: Optional[GapSchedule] = None
    mixing: str = "base"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        floor = self.floor
        if not 0 < floor <= 1.0 / self.n + 1e-15:
            raise ValueError(f"delta_floor must lie in (0, 1/n], got {floor}")
        if not 0 <= self.density <= 1:
            raise ValueError("density must lie in [0, 1]")
        if self.matrix is not None:
            m = tuple(tuple(float(v) for v in row) for row in self.matrix)
            object.__setattr__(self, "matrix", m)
            StochasticMatrix(m, positive_diagonal=True)
            if len(m) != self.n:
                raise ValueError("matrix dimension does not match n")
        if self.kind == "pattern_scheduled":
            if not self.patterns:
                raise ValueError("pattern_scheduled needs a non-empty pattern list")
            pats = tuple(tuple(tuple(bool(b) for b in row) for row in p) for p in self.patterns)
            for p in pats:
                arr = np.array(p, dtype=bool)
                if arr.shape != (self.n, self.n):
                    raise ValueError("pattern dimension does not match n")
                if not arr.diagonal().all():
                    raise ValueError("scheduled patterns need a full diagonal")
            object.__setattr__(self, "patterns", pats)
        if self.kind == "adversarial_gap":
            if self.schedule is None:
                raise ValueError("adversarial_gap needs a schedule")
            if self.mixing not in MIXING:
                raise ValueError(f"unknown mixing {self.mixing!r}")

    @property
    def floor(self) -> float:
        return 1.0 / (2 * self.n) if self.delta_floor is None else float(self.delta_floor)

    def __call__(self, t: int) -> StochasticMatrix:
        return generate(self, t)

    def sequence(self, horizon: int) -> MatrixSequence:
        return MatrixSequence(self, horizon)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "seed": self.seed, "delta_floor": self.delta_floor,
             "density": self.density}
        if self.matrix is not None:
            d["matrix"] = [list(r) for r in self.matrix]
        if self.patterns is not None:
            d["patterns"] = [[[int(b) for b in row] for row in p] for p in self.patterns]
        if self.schedule is not None:
            d["schedule"] = self.schedule.to_dict()
            d["mixing"] = self.mixing
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        known = {"kind", "n", "seed", "delta_floor", "density", "matrix", "patterns", "schedule", "mixing"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown generator fields: {sorted(extra)}")
        sched = d.get("schedule")
        return cls(
            kind=d["kind"],
            n=int(d["n"]),
            seed=int(d.get("seed", 0)),
            delta_floor=d.get("delta_floor"),
            density=float(d.get("density", 0.3)),
            matrix=None if d.get("matrix") is None else tuple(map(tuple, d["matrix"])),
            patterns=None if d.get("patterns") is None else tuple(
                tuple(tuple(r) for r in p) for p in d["patterns"]),
            schedule=None if sched is None else GapSchedule.from_dict(sched),
            mixing=d.get("mixing", "base"),
        )


def _rng(spec: GeneratorSpec, t: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, KINDS.index(spec.kind), t])


@lru_cache(maxsize=256)
def _base_matrix(spec: GeneratorSpec) -> np.ndarray:
    if spec.matrix is not None:
        return np.array(spec.matrix)
    rng = np.random.default_rng([spec.seed, KINDS.index(spec.kind)])
    if spec.kind == "adversarial_gap":
        pattern = np.ones((spec.n, spec.n), dtype=bool)
    else:
        pattern = random_pattern(rng, spec.n, spec.density)
    return random_stochastic_matrix(rng, pattern, spec.floor)


class _WindowTable:
    """Lazily extended window end times for each gap schedule."""

    def __init__(self):
        self._ends: Dict[GapSchedule, List[int]] = {}
        self._lock = threading.Lock()

    def locate(self, sched: GapSchedule, t: int) -> Tuple[int, int, int]:
        """Window ``(i, start, end)`` containing time `t`."""
        with self._lock:
            ends = self._ends.setdefault(sched, [])
            while not ends or ends[-1] <= t:
                i = WINDOW_START + len(ends)
                ends.append((ends[-1] if ends else 0) + sched.window_length(i))
            k = bisect.bisect_right(ends, t)
            start = ends[k - 1] if k else 0
            return WINDOW_START + k, start, ends[k]


_windows = _WindowTable()


def window_of(spec: GeneratorSpec, t: int) -> Tuple[int, int, int]:
    return _windows.locate(spec.schedule, t)


def generate(spec: GeneratorSpec, t: int) -> StochasticMatrix:
    """The matrix ``A(t)`` described by `spec`; deterministic in ``(spec, t)``."""
    if t < 0:
        raise ValueError("negative time")
    n = spec.n
    if spec.kind == "constant":
        a = _base_matrix(spec)
    elif spec.kind == "random_positive_diagonal":
        rng = _rng(spec, t)
        a = random_stochastic_matrix(rng, random_pattern(rng, n, spec.density), spec.floor)
    elif spec.kind == "type_symmetric":
        rng = _rng(spec, t)
        a = random_stochastic_matrix(rng, random_pattern(rng, n, spec.density, symmetric=True), spec.floor)
    elif spec.kind == "pattern_scheduled":
        rng = _rng(spec, t)
        pattern = np.array(spec.patterns[t % len(spec.patterns)], dtype=bool)
        a = random_stochastic_matrix(rng, pattern, spec.floor)
    else:
        i, _, end = window_of(spec, t)
        if t != end - 1:
            a = np.eye(n)
        elif spec.mixing == "base":
            a = _base_matrix(spec)
        else:
            e = spec.schedule.delta ** spec.schedule.window_length(i)
            a = (1.0 - e) * np.eye(n) + (e / n) * np.ones((n, n))
    return StochasticMatrix(a, positive_diagonal=True)

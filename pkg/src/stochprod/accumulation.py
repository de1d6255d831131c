"""Forward/backward accumulations of matrix sequences and their segmentation.

A backward accumulation ``A(t, s) = A(t-1) ... A(s)`` drives the consensus
process; a forward accumulation ``A(s, t) = A(s) ... A(t-1)`` drives the Markov
process. Both are addressed here by ``(direction, s, t)`` with ``s <= t``.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .matrix_core import (
    StochasticMatrix,
    ZeroPattern,
    as_stochastic,
    multiply,
    pattern_of,
)
from .structure import GantmacherForm, gantmacher_form

FORWARD = "forward"
BACKWARD = "backward"
_ALIASES = {"forward": FORWARD, "fwd": FORWARD, "backward": BACKWARD, "bwd": BACKWARD}


def normalize_direction(direction: str) -> str:
    try:
        return _ALIASES[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}") from None


class MatrixSequence:
    """Finite-horizon, index-addressed sequence ``A(0), ..., A(horizon - 1)``.

    `source` is either a list of matrices or a callable ``t -> matrix`` that
    must be deterministic in `t` (generated matrices are cached on first use).
    With ``positive_diagonal=True`` every accessed matrix is checked.
    """

    def __init__(
        self,
        source: Union[Sequence, Callable[[int], object]],
        horizon: Optional[int] = None,
        *,
        positive_diagonal: bool = True,
    ):
        self.positive_diagonal = positive_diagonal
        self._cache: Dict[int, StochasticMatrix] = {}
        if callable(source):
            if horizon is None:
                raise ValueError("a generated sequence needs a horizon")
            self._fn = source
            self._stored = None
        else:
            stored = [as_stochastic(m) for m in source]
            if not stored:
                raise ValueError("empty matrix sequence")
            if horizon is None:
                horizon = len(stored)
            if horizon > len(stored):
                raise ValueError(f"horizon {horizon} exceeds {len(stored)} stored matrices")
            if len({m.n for m in stored}) != 1:
                raise ValueError("matrices do not share one dimension")
            self._fn = None
            self._stored = stored
        if horizon < 0:
            raise ValueError("negative horizon")
        self.horizon = int(horizon)
        self._n: Optional[int] = None

    @classmethod
    def constant(cls, matrix, horizon: int, **kw) -> "MatrixSequence":
        m = as_stochastic(matrix)
        return cls(lambda t: m, horizon, **kw)

    @classmethod
    def periodic(cls, matrices: Sequence, horizon: int, **kw) -> "MatrixSequence":
        ms = [as_stochastic(m) for m in matrices]
        return cls(lambda t: ms[t % len(ms)], horizon, **kw)

    def __len__(self) -> int:
        return self.horizon

    @property
    def n(self) -> int:
        if self._n is None:
            self._n = self[0].n
        return self._n

    def __getitem__(self, t: int) -> StochasticMatrix:
        if not 0 <= t < self.horizon:
            raise IndexError(f"time {t} outside horizon {self.horizon}")
        if self._stored is not None:
            m = self._stored[t]
        else:
            m = self._cache.get(t)
            if m is None:
                m = as_stochastic(self._fn(t))
                self._cache[t] = m
        if self.positive_diagonal and not m.has_positive_diagonal():
            raise ValueError(f"A({t}) does not have a positive diagonal")
        return m

    def __iter__(self) -> Iterator[StochasticMatrix]:
        return (self[t] for t in range(self.horizon))


@dataclass(frozen=True)
class Accumulation:
    direction: str
    start: int
    end: int
    value: StochasticMatrix


def _check_window(seq: MatrixSequence, s: int, t: int) -> None:
    if not 0 <= s <= t <= seq.horizon:
        raise IndexError(f"window ({s}, {t}) outside horizon {seq.horizon}")


def running_accumulation(
    seq: MatrixSequence, direction: str, s: int, t: int
) -> Iterator[Tuple[int, StochasticMatrix]]:
    """Yield ``(u, A over [s, u))`` for ``u = s, s+1, ..., t``, one product per step."""
    direction = normalize_direction(direction)
    _check_window(seq, s, t)
    acc = StochasticMatrix.identity(seq.n)
    yield s, acc
    for u in range(s, t):
        acc = multiply(seq[u], acc) if direction == BACKWARD else multiply(acc, seq[u])
        yield u + 1, acc


def accumulate(seq: MatrixSequence, direction: str, s: int, t: int) -> Accumulation:
    """Product of ``A(s), ..., A(t-1)`` in the order given by `direction`.

    ``s == t`` gives the identity.
    """
    direction = normalize_direction(direction)
    acc = None
    for _, acc in running_accumulation(seq, direction, s, t):
        pass
    return Accumulation(direction, s, t, acc)


@dataclass(frozen=True)
class Segmentation:
    """Cut points whose consecutive accumulations share one saturated pattern.

    ``cut_points`` are the retained cuts ``t_0 < t_1 < ... < t_m``; every window
    ``[t_i, t_{i+1})`` accumulates to `segment_pattern`. ``warmup_cuts`` precede
    ``t_0`` and ``tail_cuts`` follow ``t_m``; both are saturation cuts whose
    windows carry a different pattern. ``all_cuts`` and ``patterns`` keep the
    full phase-one output (``patterns[i]`` belongs to window ``all_cuts[i:i+2]``).
    """

    direction: str
    horizon: int
    cut_points: Tuple[int, ...]
    segment_pattern: ZeroPattern
    warmup_cuts: Tuple[int, ...]
    tail_cuts: Tuple[int, ...]
    stabilized: bool
    all_cuts: Tuple[int, ...]
    patterns: Tuple[ZeroPattern, ...] = dataclasses.field(repr=False)
    monotonicity_violations: Tuple[int, ...] = ()

    @property
    def gaps(self) -> List[int]:
        return [b - a for a, b in zip(self.cut_points, self.cut_points[1:])]

    @property
    def windows(self) -> List[Tuple[int, int]]:
        return list(zip(self.cut_points, self.cut_points[1:]))

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "horizon": self.horizon,
            "cut_points": list(self.cut_points),
            "segment_pattern": self.segment_pattern.to_grid(),
            "warmup_cuts": list(self.warmup_cuts),
            "tail_cuts": list(self.tail_cuts),
            "stabilized": self.stabilized,
            "all_cuts": list(self.all_cuts),
            "monotonicity_violations": list(self.monotonicity_violations),
        }


def segment(seq: MatrixSequence, direction: str = BACKWARD, horizon: Optional[int] = None) -> Segmentation:
    """Split ``[0, horizon)`` into windows with a common saturated pattern.

    Phase one walks from cut ``c`` and stops at the first ``t`` whose
    accumulated pattern over ``[c, t)`` equals the pattern of the whole
    remainder ``[c, horizon)``; positive diagonals make that running pattern
    monotone, so the first hit is the saturation point. The window patterns
    obtained this way can only shrink from cut to cut. Phase two keeps the
    longest run of equal window patterns (the later run on ties); windows
    before it are warm-up, windows after it are remainders cut short by the
    horizon. ``stabilized`` means the kept run has at least two windows.

    Patterns are propagated in the boolean semiring from the per-factor
    patterns, so long windows are not affected by floating underflow.
    """
    direction = normalize_direction(direction)
    T = seq.horizon if horizon is None else int(horizon)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    if T > seq.horizon:
        raise ValueError(f"horizon {T} exceeds sequence horizon {seq.horizon}")

    pats = []
    for t in range(T):
        m = seq[t]
        if not m.has_positive_diagonal():
            raise ValueError(f"A({t}) does not have a positive diagonal")
        pats.append(pattern_of(m))
    n = pats[0].n
    backward = direction == BACKWARD

    # suffix[c] = pattern of the accumulation over [c, T)
    suffix: List[ZeroPattern] = [None] * (T + 1)
    suffix[T] = ZeroPattern.identity(n)
    for c in range(T - 1, -1, -1):
        suffix[c] = suffix[c + 1] @ pats[c] if backward else pats[c] @ suffix[c + 1]

    cuts = [0]
    window_pats: List[ZeroPattern] = []
    c = 0
    while c < T:
        target = suffix[c]
        run = ZeroPattern.identity(n)
        t = c
        while True:
            run = pats[t] @ run if backward else run @ pats[t]
            t += 1
            if run == target:
                break
        cuts.append(t)
        window_pats.append(run)
        c = t

    violations = tuple(
        i for i in range(len(window_pats) - 1) if not window_pats[i + 1] <= window_pats[i]
    )

    best_start, best_len, pos = 0, 0, 0
    for _, grp in itertools.groupby(window_pats):
        length = len(list(grp))
        if length >= best_len:
            best_start, best_len = pos, length
        pos += length

    retained = tuple(cuts[best_start:best_start + best_len + 1])
    return Segmentation(
        direction=direction,
        horizon=T,
        cut_points=retained,
        segment_pattern=window_pats[best_start],
        warmup_cuts=tuple(cuts[:best_start]),
        tail_cuts=tuple(cuts[best_start + best_len + 1:]),
        stabilized=best_len >= 2,
        all_cuts=tuple(cuts),
        patterns=tuple(window_pats),
        monotonicity_violations=violations,
    )


def block_dichotomy_violations(form: GantmacherForm) -> List[str]:
    """Blocks breaking "diagonal blocks positive, other blocks positive or zero"."""
    out = []
    p = form.partition.p
    for k in range(p):
        for l in range(p):
            blk = form.positive_block(k, l)
            if k == l and not blk.all():
                out.append(f"diagonal block {k} is not all-positive")
            elif k != l and blk.any() and not blk.all():
                out.append(f"block ({k},{l}) is neither all-positive nor all-zero")
    return out


def segment_gantmacher(seg: Segmentation) -> GantmacherForm:
    """Gantmacher form of the common window pattern, with block checks attached.

    Raises
    ------
    ValueError
        If the segmentation did not stabilize.
    """
    if not seg.stabilized:
        raise ValueError("segmentation is not stabilized")
    form = gantmacher_form(seg.segment_pattern)
    problems = form.structure_errors() + block_dichotomy_violations(form)
    return dataclasses.replace(form, violations=tuple(problems))

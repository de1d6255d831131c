"""Consensus (backward) and Markov (forward) processes driven by a matrix sequence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .accumulation import FORWARD, MatrixSequence, running_accumulation, segment
from .matrix_core import EPS_ROW, MatrixLike, as_array, ergodicity_coefficient


@dataclass(frozen=True)
class OpinionState:
    x: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class DistributionState:
    p: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class ClusterReport:
    clusters: Tuple[Tuple[int, ...], ...]
    values: Tuple[float, ...]
    converged: bool
    unsettled: Tuple[int, ...] = ()
    spread: float = 0.0
    movement: float = 0.0

    def to_dict(self) -> dict:
        return {
            "clusters": [list(c) for c in self.clusters],
            "values": list(self.values),
            "converged": self.converged,
            "unsettled": list(self.unsettled),
            "spread": self.spread,
            "movement": self.movement,
        }


def consensus_step(state: OpinionState, a: MatrixLike) -> OpinionState:
    """One step ``x(t+1) = A(t) x(t)``."""
    m = as_array(a)
    x = np.asarray(state.x, dtype=float)
    if m.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {m.shape} vs vector {x.shape}")
    return OpinionState(m @ x, state.t + 1)


def markov_step(state: DistributionState, a: MatrixLike) -> DistributionState:
    """One step ``p(t+1) = p(t) A(t)`` on a row distribution."""
    m = as_array(a)
    p = np.asarray(state.p, dtype=float)
    if m.shape[0] != p.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {m.shape} vs vector {p.shape}")
    return DistributionState(p @ m, state.t + 1)


def cluster_opinions(
    x: Sequence[float],
    eps: float = 1e-6,
    movement: Optional[np.ndarray] = None,
    tol: float = 1e-10,
) -> ClusterReport:
    """Single-linkage grouping of sorted opinions with gap threshold `eps`.

    `movement` is the last per-agent change; agents still moving by at least
    `tol` are listed as unsettled.
    """
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    groups: List[List[int]] = [[int(order[0])]]
    for prev, cur in zip(order, order[1:]):
        if x[cur] - x[prev] > eps:
            groups.append([])
        groups[-1].append(int(cur))
    clusters = tuple(tuple(sorted(g)) for g in groups)
    values = tuple(float(x[list(c)].mean()) for c in clusters)
    spread = max(float(np.ptp(x[list(c)])) for c in clusters)
    if movement is None:
        move, unsettled = 0.0, ()
    else:
        movement = np.abs(np.asarray(movement, dtype=float))
        move = float(movement.max())
        unsettled = tuple(int(i) for i in np.flatnonzero(movement >= tol))
    converged = move < tol and spread <= eps
    return ClusterReport(clusters, values, converged, unsettled, spread, move)


@dataclass
class ConsensusRun:
    trace: np.ndarray
    report: ClusterReport

    @property
    def states(self) -> List[OpinionState]:
        return [OpinionState(x, t) for t, x in enumerate(self.trace)]

    @property
    def final(self) -> np.ndarray:
        return self.trace[-1]


@dataclass
class MarkovRun:
    trace: np.ndarray
    converged: bool

    @property
    def final(self) -> np.ndarray:
        return self.trace[-1]


def _iterate(seq, v0, horizon, tol, patience, step):
    T = seq.horizon if horizon is None else int(horizon)
    if T > seq.horizon:
        raise ValueError(f"horizon {T} exceeds sequence horizon {seq.horizon}")
    trace = [np.asarray(v0, dtype=float)]
    quiet = 0
    stopped = False
    for t in range(T):
        trace.append(step(trace[-1], seq[t]))
        if np.abs(trace[-1] - trace[-2]).max() < tol:
            quiet += 1
            if patience is not None and quiet >= patience:
                stopped = True
                break
        else:
            quiet = 0
    return np.array(trace), stopped


def run_consensus(
    seq: MatrixSequence,
    x0: Sequence[float],
    horizon: Optional[int] = None,
    tol: float = 1e-10,
    *,
    patience: Optional[int] = 10,
    eps_cluster: float = 1e-6,
) -> ConsensusRun:
    """Iterate the consensus process and summarize where opinions settled.

    Stops early once the largest step-to-step movement stays below `tol` for
    `patience` consecutive steps (``patience=None`` always runs to the horizon).
    ``trace[t]`` equals ``A(t, 0) x0``.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (seq.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({seq.n},)")

    def step(x, a):
        return consensus_step(OpinionState(x), a).x

    trace, _ = _iterate(seq, x0, horizon, tol, patience, step)
    movement = trace[-1] - trace[-2] if len(trace) > 1 else np.zeros_like(x0)
    report = cluster_opinions(trace[-1], eps_cluster, movement, tol)
    return ConsensusRun(trace, report)


def run_markov(
    seq: MatrixSequence,
    p0: Sequence[float],
    horizon: Optional[int] = None,
    tol: float = 1e-10,
    *,
    patience: Optional[int] = 10,
) -> MarkovRun:
    """Iterate ``p(t+1) = p(t) A(t)``; ``trace[t]`` equals ``p0 A(0, t)``."""
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (seq.n,):
        raise ValueError(f"p0 has shape {p0.shape}, expected ({seq.n},)")
    if np.any(p0 < 0) or abs(p0.sum() - 1) > EPS_ROW:
        raise ValueError("p0 is not a probability vector")

    def step(p, a):
        return markov_step(DistributionState(p), a).p

    trace, stopped = _iterate(seq, p0, horizon, tol, patience, step)
    converged = stopped or (len(trace) > 1 and np.abs(trace[-1] - trace[-2]).max() < tol)
    return MarkovRun(trace, bool(converged))


def weak_ergodicity_estimate(
    seq: MatrixSequence, cls: Sequence[int], horizon: Optional[int] = None
) -> List[float]:
    """Ergodicity coefficient of the forward-accumulated ``[cls, cls]`` block at each cut.

    Accumulation starts at the first retained cut of the forward segmentation;
    one value is returned per later cut.

    Raises
    ------
    ValueError
        If some row in `cls` has a positive entry outside `cls` in the
        common window pattern.
    """
    cls = sorted(set(int(i) for i in cls))
    if not cls:
        raise ValueError("empty class")
    seg = segment(seq, FORWARD, horizon)
    bits = seg.segment_pattern.bits
    outside = np.setdiff1d(np.arange(bits.shape[0]), cls)
    if outside.size and bits[np.ix_(cls, outside)].any():
        raise ValueError("class is not closed under the segment pattern")
    cuts = seg.cut_points
    wanted = set(cuts[1:])
    taus = []
    for u, acc in running_accumulation(seq, FORWARD, cuts[0], cuts[-1]):
        if u in wanted:
            taus.append(ergodicity_coefficient(acc.entries[np.ix_(cls, cls)]))
    return taus

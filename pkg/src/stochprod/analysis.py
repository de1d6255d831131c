"""Hypothesis checks and conclusion residuals for products with positive diagonals.

The checker segments a backward accumulation, measures the positive minimum of
every window, and reports how far the accumulated product is from the limit
shape: consensus blocks on the essential classes and a vanishing block on the
inessential indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .accumulation import BACKWARD, MatrixSequence, Segmentation, accumulate, segment
from .matrix_core import (
    block_row_sum_norm,
    ergodicity_coefficient,
    min_plus,
    multiply,
)
from .structure import ClassPartition, communication_classes

SCHEDULE_KINDS = ("constant", "log", "loglog", "custom")
# window index of the first generated/fitted segment; log(log(i)) > 0 from here on
WINDOW_START = 3


@dataclass(frozen=True)
class GapSchedule:
    """Segment lengths ``gap(i)`` and the induced terms ``delta ** gap(i)``.

    ``gap(i)`` is ``N`` (constant), ``a*log(i)`` (log), ``a*log(log(i))``
    (loglog) or ``gaps[i - WINDOW_START]`` (custom).
    """

    kind: str
    delta: float
    a: float = 1.0
    N: int = 1
    gaps: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.kind == "constant" and self.N < 1:
            raise ValueError("N must be at least 1")
        if self.kind == "custom":
            if not self.gaps or min(self.gaps) < 1:
                raise ValueError("custom schedule needs positive integer gaps")
            object.__setattr__(self, "gaps", tuple(int(g) for g in self.gaps))

    @property
    def first_index(self) -> int:
        """Where the series starts: 3 for loglog (log(log(i)) undefined below), else 1."""
        if self.kind == "loglog":
            return 3
        if self.kind == "custom":
            return WINDOW_START
        return 1

    def gap(self, i):
        i = np.asarray(i, dtype=float)
        if self.kind == "constant":
            return np.full_like(i, float(self.N))
        if self.kind == "log":
            return self.a * np.log(i)
        if self.kind == "loglog":
            return self.a * np.log(np.log(i))
        idx = (i - WINDOW_START).astype(int)
        return np.asarray(self.gaps, dtype=float)[idx]

    def window_length(self, i: int) -> int:
        """Integer length of generated window `i` (``i >= WINDOW_START``)."""
        if self.kind == "custom":
            k = i - WINDOW_START
            return self.gaps[k % len(self.gaps)]
        return max(1, math.ceil(float(self.gap(i)) - 1e-9))

    def terms(self, upto: int) -> np.ndarray:
        last = upto if self.kind != "custom" else min(upto, WINDOW_START + len(self.gaps) - 1)
        i = np.arange(self.first_index, last + 1)
        return np.power(self.delta, self.gap(i))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "delta": self.delta, "a": self.a, "N": self.N}
        if self.kind == "custom":
            d["gaps"] = list(self.gaps)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GapSchedule":
        return cls(
            kind=d["kind"],
            delta=float(d["delta"]),
            a=float(d.get("a", 1.0)),
            N=int(d.get("N", 1)),
            gaps=tuple(d.get("gaps", ())),
        )


def series_partial_sums(sched: GapSchedule, upto: int) -> np.ndarray:
    """Running sums of the schedule terms, summed in ascending index order."""
    if sched.kind == "loglog" and upto < 3:
        raise ValueError("loglog series starts at i = 3")
    if upto < sched.first_index:
        raise ValueError(f"upto must be at least {sched.first_index}")
    # cumsum is strictly sequential, unlike np.sum's pairwise reduction
    return np.cumsum(sched.terms(upto))


def series_partial_sum(sched: GapSchedule, upto: int) -> float:
    return float(series_partial_sums(sched, upto)[-1])


def classify_schedule(sched: GapSchedule) -> str:
    """``"divergent"`` or ``"convergent"`` for the series of ``delta ** gap(i)``.

    ``delta ** (a*log(i)) = i ** (a*log(delta))`` is a p-series, divergent iff
    ``delta >= exp(-1/a)``. Constant and loglog schedules always diverge.
    """
    if sched.kind == "constant":
        return "divergent"
    if sched.kind == "loglog":
        return "divergent"
    if sched.kind == "log":
        return "divergent" if sched.a * math.log(sched.delta) >= -1.0 else "convergent"
    raise ValueError("custom schedules have no closed form; use hypothesis_from_uniform_bound")


@dataclass(frozen=True)
class GapFit:
    kind: str
    a: float
    offset: float
    rms: float


def fit_gap_shape(gaps: Sequence[float]) -> GapFit:
    """Least-squares fit of ``gaps[k] ~ a*f(k + WINDOW_START) + b``.

    Candidates are constant, log and loglog growth; the constant model wins
    whenever it is within 0.05 of the best residual.
    """
    g = np.asarray(gaps, dtype=float)
    i = np.arange(WINDOW_START, WINDOW_START + g.size, dtype=float)
    const_rms = float(np.sqrt(np.mean((g - g.mean()) ** 2)))
    fits = [GapFit("constant", 0.0, float(g.mean()), const_rms)]
    for kind, f in (("log", np.log(i)), ("loglog", np.log(np.log(i)))):
        if g.size < 3 or np.ptp(f) == 0:
            continue
        X = np.stack([f, np.ones_like(f)], axis=1)
        (a, b), *_ = np.linalg.lstsq(X, g, rcond=None)
        rms = float(np.sqrt(np.mean((g - X @ np.array([a, b])) ** 2)))
        fits.append(GapFit(kind, float(a), float(b), rms))
    best = min(fits, key=lambda f: f.rms)
    if fits[0].rms <= best.rms + 0.05:
        return fits[0]
    return best


def partial_sum_growth(terms: Sequence[float]) -> bool:
    """Crude divergence evidence: the later half of the terms still carries
    at least half the mass of the earlier half."""
    t = np.asarray(terms, dtype=float)
    if t.size < 8:
        return False
    h = t.size // 2
    return bool(t[h:].sum() >= 0.5 * t[:h].sum())


def hypothesis_from_uniform_bound(delta: float, gaps: Sequence[int]) -> str:
    """Decide whether ``sum_i delta ** gaps[i]`` diverges.

    With every factor's positive minimum above `delta`, a window of length
    ``gap`` has positive minimum at least ``delta ** gap``. Returns
    ``"satisfied"`` (series diverges), ``"violated"`` (the lower bound's
    series converges, so it certifies nothing) or ``"unknown"``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    gaps = [int(x) for x in gaps]
    if not gaps:
        return "unknown"
    if len(set(gaps)) == 1:
        return "satisfied"
    if len(gaps) >= 3:
        fit = fit_gap_shape(gaps)
        if fit.rms <= 0.75:
            if fit.kind == "constant":
                return "satisfied"
            if fit.a <= 0:
                return "satisfied"
            verdict = classify_schedule(GapSchedule(fit.kind, delta, a=fit.a))
            return "satisfied" if verdict == "divergent" else "violated"
    terms = np.power(delta, np.asarray(gaps, dtype=float))
    return "satisfied" if partial_sum_growth(terms) else "unknown"


@dataclass
class TheoremReport:
    """Outcome of :func:`check_theorem`; every residual should tend to zero."""

    segmentation: Segmentation
    classes: ClassPartition
    delta_series: List[float]
    hypothesis_flags: Dict[str, object]
    conclusion_residuals: Dict[str, object]
    tol: float
    envelope: List[float] = field(default_factory=list)
    tau_trace: Dict[int, List[float]] = field(default_factory=dict)
    window_jj_norms: List[float] = field(default_factory=list)

    @property
    def conclusion_verified(self) -> bool:
        r = self.conclusion_residuals
        worst = max([r["jj_norm"], *r["class_tau"], *r["class_row_spread"]], default=0.0)
        return worst < self.tol

    @property
    def hypothesis_certified(self) -> bool:
        return self.hypothesis_flags["divergence_evidence"] == "schedule-certified"

    def to_dict(self) -> dict:
        return {
            "segmentation": self.segmentation.to_dict(),
            "classes": self.classes.to_dict(),
            "delta_series": self.delta_series,
            "hypothesis_flags": self.hypothesis_flags,
            "hypothesis_certified": self.hypothesis_certified,
            "conclusion_residuals": self.conclusion_residuals,
            "conclusion_verified": self.conclusion_verified,
            "tol": self.tol,
            "envelope": self.envelope,
            "window_jj_norms": self.window_jj_norms,
        }


def _row_spread(block: np.ndarray) -> float:
    if block.shape[0] < 2:
        return 0.0
    return float(np.abs(block[:, None, :] - block[None, :, :]).max())


def check_theorem(
    seq: MatrixSequence,
    horizon: Optional[int] = None,
    tol: float = 1e-8,
    *,
    delta_floor: Optional[float] = None,
    schedule: Optional[GapSchedule] = None,
) -> TheoremReport:
    """Segment the backward accumulation and measure hypotheses and residuals.

    Residuals are computed on ``A(horizon, t_0)``:

    * ``class_row_spread`` - per essential class, largest entry difference
      between two rows of its diagonal block;
    * ``jj_norm`` - row-sum norm of the block on the inessential indices;
    * ``class_tau`` - ergodicity coefficient of each essential diagonal block;
    * ``oscillation`` - largest change of the inessential rows between the
      last ten cut accumulations (reported only).

    Divergence of the window minima cannot be decided from a finite prefix,
    so ``divergence_evidence`` is ``schedule-certified`` (a known schedule or
    the gap fit proves divergence), ``empirical-growth`` or ``inconclusive``.
    """
    T = seq.horizon if horizon is None else int(horizon)
    positive_diagonals = all(seq[t].has_positive_diagonal() for t in range(T))
    if not positive_diagonals:
        raise ValueError("sequence does not have positive diagonals")
    seg = segment(seq, BACKWARD, T)
    part = communication_classes(seg.segment_pattern)
    J = list(part.inessential_indices)
    essential = [list(c) for c in part.essential]

    t0 = seg.cut_points[0]
    running = accumulate(seq, BACKWARD, t0, t0).value
    cut_accs = [running]
    deltas, envelope, jj_norms = [], [], []
    tau_trace: Dict[int, List[float]] = {k: [] for k in range(len(essential))}
    env = 1.0
    for s, t in seg.windows:
        w = accumulate(seq, BACKWARD, s, t).value
        d = min_plus(w)
        deltas.append(d)
        env *= 1.0 - d
        envelope.append(env)
        if J:
            jj_norms.append(block_row_sum_norm(w, J, J))
        running = multiply(w, running)
        cut_accs.append(running)
        for k, cls in enumerate(essential):
            tau_trace[k].append(ergodicity_coefficient(running.entries[np.ix_(cls, cls)]))

    tail = accumulate(seq, BACKWARD, seg.cut_points[-1], T).value
    final = multiply(tail, running).entries

    recent = cut_accs[-11:]
    if J and len(recent) > 1:
        oscillation = max(
            float(np.abs(b.entries[J] - a.entries[J]).max()) for a, b in zip(recent, recent[1:])
        )
    else:
        oscillation = 0.0
    residuals = {
        "class_row_spread": [_row_spread(final[np.ix_(c, c)]) for c in essential],
        "jj_norm": block_row_sum_norm(final, J, J) if J else 0.0,
        "class_tau": [ergodicity_coefficient(final[np.ix_(c, c)]) for c in essential],
        "oscillation": oscillation,
    }

    uniform_verdict = None
    if schedule is not None and schedule.kind != "custom":
        evidence = "schedule-certified" if classify_schedule(schedule) == "divergent" else "inconclusive"
    else:
        evidence = None
        if schedule is not None:
            uniform_verdict = hypothesis_from_uniform_bound(schedule.delta, schedule.gaps)
        elif delta_floor is not None:
            uniform_verdict = hypothesis_from_uniform_bound(delta_floor, seg.gaps)
        if uniform_verdict == "satisfied":
            evidence = "schedule-certified"
        elif uniform_verdict == "violated":
            evidence = "inconclusive"
        else:
            evidence = "empirical-growth" if partial_sum_growth(deltas) else "inconclusive"

    flags = {
        "positive_diagonals": positive_diagonals,
        "stabilized_segments": seg.stabilized,
        "divergence_evidence": evidence,
        "uniform_bound_verdict": uniform_verdict,
    }
    return TheoremReport(
        segmentation=seg,
        classes=part,
        delta_series=deltas,
        hypothesis_flags=flags,
        conclusion_residuals=residuals,
        tol=tol,
        envelope=envelope,
        tau_trace=tau_trace,
        window_jj_norms=jj_norms,
    )

"""Communication classes and the Gantmacher normal form of a zero pattern."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from .matrix_core import EPS_POS, StochasticMatrix, ZeroPattern, pattern_of


@dataclass(frozen=True)
class ClassPartition:
    """Ordered communication classes of a positive-diagonal pattern.

    ``classes[:g]`` are the essential classes, sorted by smallest member.
    The remaining inessential classes follow in an order where a class comes
    after every class it reaches.
    """

    classes: Tuple[Tuple[int, ...], ...]
    essential_count: int
    class_of: Tuple[int, ...]

    @property
    def g(self) -> int:
        return self.essential_count

    @property
    def p(self) -> int:
        return len(self.classes)

    @property
    def n(self) -> int:
        return len(self.class_of)

    @property
    def essential(self) -> Tuple[Tuple[int, ...], ...]:
        return self.classes[: self.essential_count]

    @property
    def inessential(self) -> Tuple[Tuple[int, ...], ...]:
        return self.classes[self.essential_count:]

    @property
    def inessential_indices(self) -> Tuple[int, ...]:
        """The union of all inessential classes, sorted."""
        return tuple(sorted(i for c in self.inessential for i in c))

    def to_dict(self) -> dict:
        return {
            "classes": [list(c) for c in self.classes],
            "essential_count": self.essential_count,
        }


def strongly_connected_components(adj: np.ndarray) -> List[List[int]]:
    """Tarjan's algorithm, iterative. `adj` is a boolean adjacency matrix."""
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[v]).tolist() for v in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: List[int] = []
    comps: List[List[int]] = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            if k < len(succ[v]):
                work[-1] = (v, k + 1)
                w = succ[v][k]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def _as_pattern(a: Union[StochasticMatrix, ZeroPattern, np.ndarray]) -> ZeroPattern:
    if isinstance(a, ZeroPattern):
        return a
    return pattern_of(a)


def communication_classes(p: Union[ZeroPattern, StochasticMatrix]) -> ClassPartition:
    """Partition indices into communicating classes, essential ones first.

    Raises
    ------
    ValueError
        If a diagonal bit is unset; self-communication of every index relies
        on a positive diagonal.
    """
    p = _as_pattern(p)
    if not p.has_positive_diagonal():
        raise ValueError("pattern has a zero diagonal entry")
    adj = p.bits
    comps = strongly_connected_components(adj)
    comp_id = np.empty(p.n, dtype=int)
    for c, members in enumerate(comps):
        comp_id[members] = c

    # condensation edges: c -> d when some member of c has an edge into d
    out = [set() for _ in comps]
    rows, cols = np.nonzero(adj)
    for i, j in zip(rows.tolist(), cols.tolist()):
        ci, cj = comp_id[i], comp_id[j]
        if ci != cj:
            out[ci].add(cj)

    essential = sorted((c for c in range(len(comps)) if not out[c]), key=lambda c: comps[c][0])
    order = list(essential)
    # a class becomes ready once every class it reaches is placed
    remaining = {c: len(out[c]) for c in range(len(comps)) if out[c]}
    into = [[] for _ in comps]
    for c in remaining:
        for d in out[c]:
            into[d].append(c)
    heap = []

    def release(d):
        for c in into[d]:
            remaining[c] -= 1
            if remaining[c] == 0:
                heapq.heappush(heap, (comps[c][0], c))

    for d in essential:
        release(d)
    while heap:
        _, c = heapq.heappop(heap)
        order.append(c)
        release(c)
    assert len(order) == len(comps)

    classes = tuple(tuple(comps[c]) for c in order)
    class_of = [0] * p.n
    for k, members in enumerate(classes):
        for i in members:
            class_of[i] = k
    return ClassPartition(classes, len(essential), tuple(class_of))


def is_essential_index(part: ClassPartition, i: int) -> bool:
    if not 0 <= i < part.n:
        raise IndexError(f"index {i} out of range for n={part.n}")
    return part.class_of[i] < part.essential_count


def is_type_symmetric(a: Union[StochasticMatrix, ZeroPattern]) -> bool:
    p = _as_pattern(a)
    return p == p.T


@dataclass(frozen=True)
class GantmacherForm:
    """A simultaneous row/column permutation exposing block lower triangular shape.

    ``permutation[k]`` is the original index placed at position ``k``;
    ``matrix`` is the permuted matrix (float entries, or booleans when built
    from a pattern). ``violations`` lists block-structure problems found by
    :func:`segment_gantmacher`.
    """

    permutation: Tuple[int, ...]
    partition: ClassPartition
    matrix: np.ndarray = field(repr=False)
    violations: Tuple[str, ...] = ()

    @property
    def boundaries(self) -> Tuple[int, ...]:
        sizes = [len(c) for c in self.partition.classes]
        return tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist())

    def block(self, k: int, l: int) -> np.ndarray:
        """Block (k, l) of the permuted matrix, class ids 0-based."""
        b = self.boundaries
        return self.matrix[b[k]:b[k + 1], b[l]:b[l + 1]]

    def positive_block(self, k: int, l: int) -> np.ndarray:
        b = self.block(k, l)
        return b if b.dtype == bool else b > EPS_POS

    def structure_errors(self) -> List[str]:
        """Check the shape invariants; an empty list means all hold."""
        errs = []
        part = self.partition
        p, g = part.p, part.g
        for k in range(p):
            for l in range(k + 1, p):
                if self.positive_block(k, l).any():
                    errs.append(f"block ({k},{l}) above the diagonal is nonzero")
        for k in range(g):
            for l in range(k):
                if self.positive_block(k, l).any():
                    errs.append(f"essential block ({k},{l}) is nonzero")
        for k in range(p):
            diag = self.positive_block(k, k)
            if len(strongly_connected_components(diag)) != 1:
                errs.append(f"diagonal block {k} is reducible")
        for k in range(g, p):
            if not any(self.positive_block(k, l).any() for l in range(k)):
                errs.append(f"inessential block row {k} has no positive earlier block")
        return errs

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "partition": self.partition.to_dict(),
            "violations": list(self.violations),
        }


def gantmacher_form(a: Union[StochasticMatrix, ZeroPattern]) -> GantmacherForm:
    """Permute `a` into Gantmacher form (essential blocks first, lower triangular)."""
    if isinstance(a, ZeroPattern):
        mat = a.bits
    else:
        mat = np.asarray(a, dtype=float)
        if not np.all(np.diag(mat) > EPS_POS):
            raise ValueError("matrix does not have a positive diagonal")
    part = communication_classes(_as_pattern(a))
    perm = tuple(i for c in part.classes for i in c)
    idx = np.array(perm)
    permuted = mat[np.ix_(idx, idx)].copy()
    permuted.setflags(write=False)
    return GantmacherForm(perm, part, permuted)


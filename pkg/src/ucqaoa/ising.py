"""Ising graphs: QUBO conversion, energies, local gains and subproblem extraction.

Energy convention::

    E(s) = offset + sum_i h_i s_i + sum_{i<j} w_ij s_i s_j,   s_i = 1 - 2 x_i

so bit 0 is spin +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .qubo import QuboProblem

EDGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class IsingGraph:
    n: int
    h: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    offset: float = 0.0
    labels: np.ndarray | None = None

    def __post_init__(self):
        for name, dtype in (("h", float), ("rows", np.int64), ("cols", np.int64), ("weights", float)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        labels = np.arange(self.n) if self.labels is None else np.array(self.labels, dtype=np.int64)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "offset", float(self.offset))
        if self.h.shape != (self.n,) or labels.shape != (self.n,):
            raise ValidationError("h and labels must have one entry per node")
        if np.any(self.rows >= self.cols):
            raise ValidationError("edges must satisfy i < j")

    @classmethod
    def from_terms(cls, n, h=None, couplings=None, offset=0.0, labels=None) -> IsingGraph:
        """Canonicalize ``{(i, j): w}``: merge duplicates, fold self-couplings into the offset, drop ``|w| < 1e-12``."""
        h = np.zeros(n) if h is None else np.asarray(h, dtype=float).copy()
        merged: dict[tuple[int, int], float] = {}
        for (i, j), w in (couplings or {}).items():
            i, j = int(i), int(j)
            if i == j:
                offset += w
                continue
            key = (i, j) if i < j else (j, i)
            merged[key] = merged.get(key, 0.0) + float(w)
        items = sorted((k, w) for k, w in merged.items() if abs(w) >= EDGE_TOL)
        rows = [k[0] for k, _ in items]
        cols = [k[1] for k, _ in items]
        ws = [w for _, w in items]
        return cls(n, h, rows, cols, ws, offset, labels)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric coupling matrix ``W`` with ``W_ij = W_ji = w_ij``."""
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        d = np.concatenate([self.weights, self.weights])
        return sp.csr_matrix((d, (r, c)), shape=(self.n, self.n))

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    def couplings(self) -> dict[tuple[int, int], float]:
        return {(int(i), int(j)): float(w) for i, j, w in zip(self.rows, self.cols, self.weights)}

    def neighbors(self, i: int):
        A = self.adjacency
        lo, hi = A.indptr[i], A.indptr[i + 1]
        return A.indices[lo:hi], A.data[lo:hi]

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=float)
        return float(self.offset + s @ self.h + (self.weights * s[self.rows] * s[self.cols]).sum())

    def scale(self) -> float:
        """Largest absolute bias or coupling (0 for a constant graph)."""
        m = 0.0
        if self.n:
            m = float(np.abs(self.h).max())
        if self.n_edges:
            m = max(m, float(np.abs(self.weights).max()))
        return m

    def scaled(self, factor: float) -> IsingGraph:
        return IsingGraph(
            self.n, self.h * factor, self.rows, self.cols, self.weights * factor, self.offset * factor, self.labels
        )


def spins_of(bits) -> np.ndarray:
    return 1 - 2 * np.asarray(bits, dtype=np.int64)


@dataclass(eq=False)
class Assignment:
    """Bits plus a cached energy kept in sync by :meth:`flip`."""

    bits: np.ndarray
    energy: float = field(default=0.0)

    @classmethod
    def from_bits(cls, graph: IsingGraph, bits) -> Assignment:
        bits = np.array(bits, dtype=np.int8)
        if bits.shape != (graph.n,):
            raise ValidationError(f"assignment length {bits.shape} does not match graph size {graph.n}")
        return cls(bits, graph.energy(spins_of(bits)))

    @property
    def spins(self) -> np.ndarray:
        return spins_of(self.bits)

    def copy(self) -> Assignment:
        return Assignment(self.bits.copy(), self.energy)

    def flip(self, graph: IsingGraph, i: int) -> float:
        delta = flip_delta(graph, self, i)
        self.bits[i] ^= 1
        self.energy += delta
        return delta


def _check(graph, assignment):
    if assignment.bits.shape != (graph.n,):
        raise ValidationError(f"assignment length {assignment.bits.shape} does not match graph size {graph.n}")


def qubo_to_ising(problem: QuboProblem) -> IsingGraph:
    """Substitute ``x = (1 - s) / 2``."""
    Q = problem.Q.tocoo()
    h = np.zeros(problem.n)
    offset = problem.offset
    couplings: dict[tuple[int, int], float] = {}
    diag = Q.row == Q.col
    # q x_a = q/2 - q/2 s_a
    np.add.at(h, Q.row[diag], -Q.data[diag] / 2)
    offset += Q.data[diag].sum() / 2
    # q x_a x_b = q/4 (1 - s_a - s_b + s_a s_b)
    r, c, q = Q.row[~diag], Q.col[~diag], Q.data[~diag]
    np.add.at(h, r, -q / 4)
    np.add.at(h, c, -q / 4)
    offset += q.sum() / 4
    for a, b, v in zip(r, c, q):
        key = (int(a), int(b)) if a < b else (int(b), int(a))
        couplings[key] = couplings.get(key, 0.0) + v / 4
    return IsingGraph.from_terms(problem.n, h, couplings, float(offset))


def ising_energy(graph: IsingGraph, assignment: Assignment) -> float:
    _check(graph, assignment)
    return graph.energy(assignment.spins)


def energy_table(graph: IsingGraph, chunk: int = 1 << 16) -> np.ndarray:
    """Energy of every basis state; node 0 is the most significant bit."""
    n = graph.n
    out = np.empty(1 << n)
    shifts = (n - 1 - np.arange(n)).astype(np.int64)
    for lo in range(0, 1 << n, chunk):
        idx = np.arange(lo, min(lo + chunk, 1 << n), dtype=np.int64)
        s = 1.0 - 2.0 * ((idx[:, None] >> shifts) & 1)
        e = graph.offset + s @ graph.h
        if graph.n_edges:
            e += (s[:, graph.rows] * s[:, graph.cols]) @ graph.weights
        out[lo : lo + len(idx)] = e
    return out


def index_to_bits(index: int, n: int) -> np.ndarray:
    return np.array([(index >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


def gains(graph: IsingGraph, assignment: Assignment) -> np.ndarray:
    """``g_i = s_i (h_i + sum_j w_ij s_j)``; flipping node i changes the energy by ``-2 g_i``."""
    _check(graph, assignment)
    s = assignment.spins.astype(float)
    return s * (graph.h + graph.adjacency @ s)


def local_gain(graph: IsingGraph, spins: np.ndarray, i: int) -> float:
    nbr, w = graph.neighbors(i)
    return float(spins[i] * (graph.h[i] + w @ spins[nbr]))


def flip_delta(graph: IsingGraph, assignment: Assignment, i: int) -> float:
    if not 0 <= i < graph.n:
        raise IndexError(f"node {i} out of range for graph of size {graph.n}")
    return -2.0 * local_gain(graph, assignment.spins, i)


def extract_subproblem(graph: IsingGraph, assignment: Assignment, nodes) -> IsingGraph:
    """Induced subgraph with outside nodes frozen at their current spins.

    Subproblem node ``k`` is parent node ``nodes[k]`` (recorded in ``labels``),
    and its energy at any inner assignment equals the parent energy of the
    combined assignment.
    """
    _check(graph, assignment)
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise ValidationError("subproblem node set is empty")
    if len(np.unique(nodes)) != len(nodes) or nodes.min() < 0 or nodes.max() >= graph.n:
        raise ValidationError("subproblem nodes must be distinct and in range")
    s = assignment.spins.astype(float)
    local = np.full(graph.n, -1, dtype=np.int64)
    local[nodes] = np.arange(len(nodes))
    inside = local >= 0

    h = graph.h[nodes].copy()
    frozen_s = np.where(inside, 0.0, s)
    offset = graph.offset + frozen_s @ graph.h

    ri, ci = inside[graph.rows], inside[graph.cols]
    both = ri & ci
    neither = ~ri & ~ci
    offset += (graph.weights[neither] * s[graph.rows[neither]] * s[graph.cols[neither]]).sum()
    m = ri & ~ci
    np.add.at(h, local[graph.rows[m]], graph.weights[m] * s[graph.cols[m]])
    m = ~ri & ci
    np.add.at(h, local[graph.cols[m]], graph.weights[m] * s[graph.rows[m]])

    a, b = local[graph.rows[both]], local[graph.cols[both]]
    couplings = {}
    for x, y, w in zip(a, b, graph.weights[both]):
        key = (int(x), int(y)) if x < y else (int(y), int(x))
        couplings[key] = couplings.get(key, 0.0) + w
    return IsingGraph.from_terms(len(nodes), h, couplings, float(offset), labels=nodes)


def write_ising(graph: IsingGraph, stream):
    stream.write(f"{graph.n} {graph.offset!r}\n")
    for i, v in enumerate(graph.h):
        if v != 0.0:
            stream.write(f"b {i} {float(v)!r}\n")
    for i, j, w in zip(graph.rows, graph.cols, graph.weights):
        stream.write(f"e {int(i)} {int(j)} {float(w)!r}\n")


def read_ising(stream) -> IsingGraph:
    header = stream.readline().split()
    if len(header) != 2:
        raise ValidationError("Ising header must be 'n e0'")
    n, offset = int(header[0]), float(header[1])
    h = np.zeros(n)
    couplings = {}
    for line in stream:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "b":
            h[int(parts[1])] += float(parts[2])
        elif parts[0] == "e":
            key = (int(parts[1]), int(parts[2]))
            couplings[key] = couplings.get(key, 0.0) + float(parts[3])
        else:
            raise ValidationError(f"unknown Ising record {parts[0]!r}")
    return IsingGraph.from_terms(n, h, couplings, offset)

"""Symbolic expansion of the penalized UC objective into a QUBO."""

from __future__ import annotations

import enum
import io
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CompileError, ValidationError
from .model import DemandMode, MinDownMode, PenaltyFactors, Schedule, UcpInstance

__all__ = [
    "Kind",
    "VariableMap",
    "QuboProblem",
    "PenaltyFactors",
    "compile_qubo",
    "evaluate_qubo",
    "decode",
    "encode",
    "sparsity_report",
    "write_qubo",
]


class Kind(enum.IntEnum):
    ON = 0
    START = 1


@dataclass(frozen=True)
class VariableMap:
    """Index ``k = 2 * (t * n_units + i) + kind``."""

    horizon: int
    n_units: int

    @property
    def n(self) -> int:
        return 2 * self.horizon * self.n_units

    def index(self, t: int, i: int, kind: Kind) -> int:
        return 2 * (t * self.n_units + i) + int(kind)

    def key(self, k: int) -> tuple[int, int, Kind]:
        if not 0 <= k < self.n:
            raise IndexError(k)
        tu, kind = divmod(k, 2)
        t, i = divmod(tu, self.n_units)
        return t, i, Kind(kind)

    def label(self, k: int) -> str:
        t, i, kind = self.key(k)
        return f"{kind.name.lower()}[{t},{i}]"


@dataclass(frozen=True)
class QuboProblem:
    """Minimize ``x^T Q x + offset`` with ``Q`` upper triangular (diagonal holds linear terms)."""

    n: int
    Q: sp.csr_matrix
    offset: float
    varmap: VariableMap | None = None

    def evaluate(self, x) -> float:
        return evaluate_qubo(self, x)

    def to_dense(self) -> np.ndarray:
        return self.Q.toarray()


class _Accumulator:
    def __init__(self, n):
        self.n = n
        self.const = 0.0
        self.linear = np.zeros(n)
        self.quad = defaultdict(float)

    def add_product(self, left, right, weight):
        """Add ``weight * left * right`` for affine forms ``(const, [(k, coef), ...])``."""
        c1, terms1 = left
        c2, terms2 = right
        self.const += weight * c1 * c2
        for k, a in terms2:
            self.linear[k] += weight * c1 * a
        for k, a in terms1:
            self.linear[k] += weight * c2 * a
        for k, a in terms1:
            for l, b in terms2:
                if k == l:
                    self.linear[k] += weight * a * b
                elif k < l:
                    self.quad[k, l] += weight * a * b
                else:
                    self.quad[l, k] += weight * a * b

    def to_problem(self, varmap):
        rows = list(range(self.n))
        cols = list(range(self.n))
        vals = list(self.linear)
        for (a, b), v in self.quad.items():
            rows.append(a)
            cols.append(b)
            vals.append(v)
        vals = np.asarray(vals, dtype=float)
        if not np.isfinite(vals).all() or not math.isfinite(self.const):
            raise CompileError("QUBO coefficient overflow: non-finite value produced")
        keep = vals != 0.0
        Q = sp.csr_matrix(
            (vals[keep], (np.asarray(rows)[keep], np.asarray(cols)[keep])), shape=(self.n, self.n)
        )
        Q.sum_duplicates()
        Q.eliminate_zeros()
        return QuboProblem(n=self.n, Q=Q, offset=float(self.const), varmap=varmap)


def _var(k, coef=1.0):
    return (0.0, [(k, coef)])


def compile_qubo(
    instance: UcpInstance,
    penalties: PenaltyFactors | None = None,
    demand_mode: DemandMode = DemandMode.PER_PERIOD,
    min_down_mode: MinDownMode = MinDownMode.VERBATIM,
) -> QuboProblem:
    penalties = penalties or PenaltyFactors()
    demand_mode = DemandMode(demand_mode)
    min_down_mode = MinDownMode(min_down_mode)
    T, I = instance.horizon, instance.n_units
    vm = VariableMap(T, I)
    acc = _Accumulator(vm.n)
    on = lambda t, i: vm.index(t, i, Kind.ON)  # noqa: E731
    st = lambda t, i: vm.index(t, i, Kind.START)  # noqa: E731
    one = (1.0, [])

    def prev_on(t, i):
        if t == 0:
            return (float(instance.units[i].initial_on), [])
        return _var(on(t - 1, i))

    for t in range(T):
        for i, unit in enumerate(instance.units):
            acc.linear[on(t, i)] += unit.linear_cost * unit.max_power
            acc.linear[st(t, i)] += unit.startup_cost

    if penalties.A:
        if demand_mode is DemandMode.PER_PERIOD:
            for t in range(T):
                expr = (-instance.demand[t], [(on(t, i), u.max_power) for i, u in enumerate(instance.units)])
                acc.add_product(expr, expr, penalties.A)
        else:
            expr = (
                -sum(instance.demand),
                [(on(t, i), u.max_power) for t in range(T) for i, u in enumerate(instance.units)],
            )
            acc.add_product(expr, expr, penalties.A)

    for t in range(T):
        for i, unit in enumerate(instance.units):
            p_c, p_terms = prev_on(t, i)
            s = _var(st(t, i))
            o = _var(on(t, i))
            if penalties.B:
                B = penalties.B
                acc.add_product(o, (1.0 - p_c, [(k, -a) for k, a in p_terms]), B)
                acc.add_product(s, (p_c, p_terms + [(on(t, i), -1.0)]), 2 * B)
                acc.add_product(s, one, B)
            if penalties.C:
                stop = min(t + unit.min_up, T)
                acc.add_product(s, one, penalties.C * (stop - t))
                for tau in range(t, stop):
                    acc.add_product(s, _var(on(tau, i)), -penalties.C)
            if penalties.D:
                if min_down_mode is MinDownMode.FORWARD:
                    window = range(t, min(t + unit.min_down, T))
                else:
                    window = range(max(t + 1 - unit.min_down, 0), t + 1)
                coef = (p_c, [(st(t, i), 1.0)] + p_terms + [(on(t, i), -1.0)])
                for tau in window:
                    acc.add_product(coef, _var(on(tau, i)), penalties.D)

    return acc.to_problem(vm)


def _as_binary(x, n):
    x = np.asarray(x)
    if x.shape != (n,):
        raise ValidationError(f"expected a binary vector of length {n}, got shape {x.shape}")
    return x.astype(float)


def evaluate_qubo(problem: QuboProblem, x) -> float:
    x = _as_binary(x, problem.n)
    return float(x @ (problem.Q @ x)) + problem.offset


def encode(varmap: VariableMap, schedule: Schedule) -> np.ndarray:
    if schedule.on.shape != (varmap.horizon, varmap.n_units):
        raise ValidationError("schedule shape does not match variable map")
    x = np.empty(varmap.n, dtype=np.int8)
    x[0::2] = schedule.on.reshape(-1)
    x[1::2] = schedule.start.reshape(-1)
    return x


def decode(varmap: VariableMap, x) -> Schedule:
    x = np.asarray(x)
    if x.shape != (varmap.n,):
        raise ValidationError(f"expected length {varmap.n}, got shape {x.shape}")
    shape = (varmap.horizon, varmap.n_units)
    return Schedule(x[0::2].reshape(shape), x[1::2].reshape(shape))


def sparsity_report(problem: QuboProblem) -> dict:
    """Structural nonzeros of the full symmetric matrix; off-diagonals count twice."""
    Q = problem.Q.tocoo()
    nz = Q.data != 0
    diag = int(np.count_nonzero(nz & (Q.row == Q.col)))
    off = int(np.count_nonzero(nz & (Q.row != Q.col)))
    nnz = diag + 2 * off
    dense = problem.n * problem.n
    return {"n": problem.n, "dense_elements": dense, "nnz": nnz, "density": nnz / dense if dense else 0.0}


def write_qubo(problem: QuboProblem, stream: io.TextIOBase):
    """Coordinate text format: header ``n offset`` then ``i j value`` per stored entry."""
    Q = problem.Q.tocoo()
    stream.write(f"{problem.n} {problem.offset!r}\n")
    order = np.lexsort((Q.col, Q.row))
    for k in order:
        stream.write(f"{int(Q.row[k])} {int(Q.col[k])} {float(Q.data[k])!r}\n")


def read_qubo(stream) -> QuboProblem:
    header = stream.readline().split()
    if len(header) != 2:
        raise ValidationError("QUBO header must be 'n offset'")
    n, offset = int(header[0]), float(header[1])
    rows, cols, vals = [], [], []
    for line in stream:
        if not line.strip():
            continue
        i, j, v = line.split()
        i, j = int(i), int(j)
        if i > j:
            i, j = j, i
        rows.append(i)
        cols.append(j)
        vals.append(float(v))
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return QuboProblem(n=n, Q=Q, offset=offset)

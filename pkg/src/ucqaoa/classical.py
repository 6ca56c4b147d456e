"""Exact enumeration, multi-restart 1-flip descent and simulated annealing."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConfigurationError
from .ising import IsingGraph, energy_table, index_to_bits, spins_of

BRUTE_FORCE_MAX = 24


@dataclass
class AnnealSchedule:
    t_initial: float
    t_final: float
    sweeps: int = 200
    moves_per_sweep: int | None = None

    def __post_init__(self):
        if not self.t_initial > self.t_final > 0:
            raise ConfigurationError("anneal schedule needs t_initial > t_final > 0")
        if self.sweeps < 1:
            raise ConfigurationError("sweeps must be >= 1")

    def temperatures(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.t_initial])
        return self.t_initial * (self.t_final / self.t_initial) ** (np.arange(self.sweeps) / (self.sweeps - 1))


@dataclass
class SolveResult:
    bits: np.ndarray
    energy: float
    iterations: int
    wall_time: float
    solver: str
    seed: int | None = None
    trace: list[float] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "energy": self.energy,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "seed": self.seed,
            "bits": self.bits.tolist(),
        }


def brute_force(graph: IsingGraph) -> SolveResult:
    """Global minimum by enumeration; ties go to the lexicographically smallest bitstring."""
    if graph.n > BRUTE_FORCE_MAX:
        raise CapacityError(f"brute force limited to {BRUTE_FORCE_MAX} nodes, graph has {graph.n}")
    start = time.perf_counter()
    if graph.n == 0:
        return SolveResult(np.zeros(0, np.int8), graph.offset, 1, time.perf_counter() - start, "brute_force")
    table = energy_table(graph)
    best = table.min()
    tol = 1e-12 * max(1.0, abs(best))
    index = int(np.flatnonzero(table <= best + tol)[0])
    bits = index_to_bits(index, graph.n)
    return SolveResult(
        bits, graph.energy(spins_of(bits)), len(table), time.perf_counter() - start, "brute_force"
    )


class _FlipState:
    """Spins with incrementally maintained gains ``g_i = s_i (h_i + sum_j w_ij s_j)``."""

    def __init__(self, graph: IsingGraph, bits):
        self.graph = graph
        A = graph.adjacency
        self.indptr, self.indices, self.data = A.indptr, A.indices, A.data
        self.reset(bits)

    def reset(self, bits):
        self.s = spins_of(bits).astype(float)
        self.g = self.s * (self.graph.h + self.graph.adjacency @ self.s)
        self.energy = self.graph.energy(self.s)

    def flip(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        nbr = self.indices[lo:hi]
        self.energy -= 2.0 * self.g[i]
        self.g[nbr] -= 2.0 * self.data[lo:hi] * self.s[i] * self.s[nbr]
        self.g[i] = -self.g[i]
        self.s[i] = -self.s[i]

    @property
    def bits(self) -> np.ndarray:
        return ((1 - self.s) // 2).astype(np.int8)

    def descend(self) -> int:
        """Steepest 1-flip descent to a local optimum; returns flips made."""
        flips = 0
        while True:
            tol = 1e-12 * (1.0 + float(np.abs(self.g).max()))
            i = int(np.argmax(self.g))
            if self.g[i] > tol:
                self.flip(i)
                flips += 1
                continue
            # resync: incremental drift must not fake a local optimum
            self.reset(self.bits)
            if self.g.max() <= 1e-12 * (1.0 + float(np.abs(self.g).max())):
                return flips


def local_search(
    graph: IsingGraph, restarts: int = 50, seed: int = 0, kicks: int = 10, initial=None
) -> SolveResult:
    """Random-restart steepest descent with perturbation kicks.

    Each kick flips a few random nodes and descends again; the kicked state is
    kept when it is no worse, so equal-energy plateaus are walked.
    """
    if restarts < 1:
        raise ConfigurationError("restarts must be >= 1")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    n = graph.n
    if n == 0:
        return SolveResult(np.zeros(0, np.int8), graph.offset, 0, 0.0, "local_search", seed)
    kick_size = max(1, n // 8)
    best_bits, best_energy = None, math.inf
    flips = 0
    trace = []
    for r in range(restarts):
        bits = np.asarray(initial, dtype=np.int8) if (r == 0 and initial is not None) else rng.integers(0, 2, n)
        state = _FlipState(graph, bits)
        flips += state.descend()
        for _ in range(kicks):
            saved_s, saved_g, saved_e = state.s.copy(), state.g.copy(), state.energy
            for i in rng.choice(n, size=kick_size, replace=False):
                state.flip(int(i))
            flips += state.descend()
            if state.energy > saved_e:
                state.s, state.g, state.energy = saved_s, saved_g, saved_e
        if state.energy < best_energy:
            best_energy, best_bits = state.energy, state.bits
        trace.append(best_energy)
    return SolveResult(
        best_bits,
        graph.energy(spins_of(best_bits)),
        flips,
        time.perf_counter() - start,
        "local_search",
        seed,
        trace,
    )


def default_schedule(graph: IsingGraph, seed: int = 0, sweeps: int = 200) -> AnnealSchedule:
    """``T0`` = largest |flip delta| at a random probe state, ``T1 = 1e-3 * T0``."""
    rng = np.random.default_rng(seed)
    s = spins_of(rng.integers(0, 2, graph.n)).astype(float)
    t0 = float(2.0 * np.abs(s * (graph.h + graph.adjacency @ s)).max(initial=0.0))
    if t0 <= 0:
        t0 = 1.0
    return AnnealSchedule(t0, 1e-3 * t0, sweeps)


def simulated_annealing(
    graph: IsingGraph, schedule: AnnealSchedule | None = None, seed: int = 0, initial=None
) -> SolveResult:
    """Metropolis single-flip chain with geometric cooling; returns the best state seen."""
    start = time.perf_counter()
    schedule = schedule or default_schedule(graph, seed)
    rng = np.random.default_rng(seed)
    n = graph.n
    if n == 0:
        return SolveResult(np.zeros(0, np.int8), graph.offset, 0, 0.0, "simulated_annealing", seed)
    moves = schedule.moves_per_sweep or n
    bits = np.asarray(initial, dtype=np.int8) if initial is not None else rng.integers(0, 2, n)
    state = _FlipState(graph, bits)
    best_s, best_energy = state.s.copy(), state.energy
    trace = []
    steps = 0
    for temp in schedule.temperatures():
        nodes = rng.integers(0, n, moves)
        uniform = rng.random(moves)
        for i, u in zip(nodes, uniform):
            delta = -2.0 * state.g[i]
            if delta <= 0 or u < math.exp(-delta / temp):
                state.flip(i)
                if state.energy < best_energy:
                    best_energy = state.energy
                    best_s = state.s.copy()
            steps += 1
        trace.append(best_energy)
    best_bits = ((1 - best_s) // 2).astype(np.int8)
    return SolveResult(
        best_bits,
        graph.energy(best_s),
        steps,
        time.perf_counter() - start,
        "simulated_annealing",
        seed,
        trace,
    )

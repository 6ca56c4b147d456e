"""Coarsen, solve the coarsest level, then refine level by level with gain-ranked subproblems."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .classical import BRUTE_FORCE_MAX, SolveResult, brute_force, default_schedule, local_search, simulated_annealing
from .errors import ConfigurationError
from .ising import Assignment, IsingGraph, extract_subproblem, gains, qubo_to_ising
from .model import (
    DemandMode,
    MinDownMode,
    PenaltyFactors,
    UcpInstance,
    evaluate_schedule,
)
from .multilevel import build_hierarchy, interpolate
from .quantum import QiroConfig, qiro_solve
from .qubo import compile_qubo, decode

log = logging.getLogger(__name__)

GREEDY_PROB = 0.8
SAMPLE_EPS = 1e-9


def derive_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


@dataclass
class PipelineConfig:
    penalties: PenaltyFactors = field(default_factory=PenaltyFactors)
    #: 14 keeps every subproblem inside the statevector simulator
    subproblem_size: int = 14
    coarsest_size: int = 16
    c_max: int = 3
    iter_max: int = 10
    qiro: QiroConfig = field(default_factory=QiroConfig)
    coarse_exact_max: int = 20
    coarse_restarts: int = 50
    subproblem_restarts: int = 20
    embed_dim: int = 4
    embed_iters: int = 20
    sa_sweeps: int = 200
    seed: int = 0
    demand_mode: DemandMode = DemandMode.PER_PERIOD
    min_down_mode: MinDownMode = MinDownMode.VERBATIM

    def __post_init__(self):
        self.demand_mode = DemandMode(self.demand_mode)
        self.min_down_mode = MinDownMode(self.min_down_mode)
        if self.subproblem_size < 2 or self.coarsest_size < 2:
            raise ConfigurationError("subproblem_size and coarsest_size must be >= 2")
        if self.c_max < 1 or self.iter_max < 1:
            raise ConfigurationError("c_max and iter_max must be >= 1")
        if self.coarse_exact_max > BRUTE_FORCE_MAX:
            raise ConfigurationError(f"coarse_exact_max cannot exceed {BRUTE_FORCE_MAX}")

    @classmethod
    def from_dict(cls, doc: dict) -> PipelineConfig:
        doc = dict(doc or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        try:
            if "penalties" in doc:
                doc["penalties"] = PenaltyFactors(**doc["penalties"])
            if "qiro" in doc:
                doc["qiro"] = QiroConfig(**doc["qiro"])
            return cls(**doc)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["demand_mode"] = self.demand_mode.value
        doc["min_down_mode"] = self.min_down_mode.value
        return doc


@dataclass
class RunReport:
    config: dict
    sizes: list[int]
    levels: list[dict]
    subproblems: list[dict]
    energy_trace: list[float]
    bits: np.ndarray
    energy: float
    coarse_energy: float
    coarse_objective: float
    schedule: object
    costs: object
    seed: int
    wall_time: float
    hierarchy: dict = field(default_factory=dict)
    baselines: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = True) -> dict:
        def strip(rows):
            if timings:
                return rows
            return [{k: v for k, v in r.items() if k != "wall_time"} for r in rows]

        doc = {
            "config": self.config,
            "sizes": self.sizes,
            "hierarchy": self.hierarchy,
            "levels": strip(self.levels),
            "subproblems": strip(self.subproblems),
            "energy_trace": self.energy_trace,
            "energy": self.energy,
            "coarse_energy": self.coarse_energy,
            "coarse_objective": self.coarse_objective,
            "schedule": self.schedule.to_dict(),
            "costs": self.costs.to_dict(),
            "seed": self.seed,
            "baselines": {k: strip([v])[0] for k, v in self.baselines.items()},
        }
        if timings:
            doc["wall_time"] = self.wall_time
        return doc


def select_nodes(score: np.ndarray, k: int, rng: np.random.Generator, greedy_prob: float = GREEDY_PROB) -> np.ndarray:
    """Fill ``k`` slots: top remaining score with probability ``greedy_prob``, else score-proportional draw."""
    n = len(score)
    k = min(k, n)
    weight = score + SAMPLE_EPS
    free = np.ones(n, dtype=bool)
    chosen = []
    for _ in range(k):
        if rng.random() < greedy_prob:
            i = int(np.argmax(np.where(free, weight, -np.inf)))
        else:
            p = np.where(free, weight, 0.0)
            i = int(rng.choice(n, p=p / p.sum()))
        free[i] = False
        chosen.append(i)
    return np.sort(np.array(chosen, dtype=np.int64))


def solve_subproblem(sub: IsingGraph, config: PipelineConfig, seed: int) -> SolveResult:
    if sub.n <= config.qiro.n_max:
        return qiro_solve(sub, config.qiro, seed)
    return local_search(sub, config.subproblem_restarts, seed)


def refine_level(
    graph: IsingGraph,
    assignment: Assignment,
    config: PipelineConfig,
    seed: int = 0,
    events: list | None = None,
    level: int = 0,
) -> Assignment:
    """Gain-ranked subproblem refinement; a write-back happens only on strict energy improvement."""
    a = Assignment.from_bits(graph, assignment.bits)
    rng = np.random.default_rng(seed)
    g = gains(graph, a)
    weight = np.ones(graph.n)
    A = graph.adjacency
    c = it = 0
    while c < config.c_max and it < config.iter_max:
        t0 = time.perf_counter()
        nodes = select_nodes(np.abs(g) * weight, config.subproblem_size, rng)
        sub = extract_subproblem(graph, a, nodes)
        result = solve_subproblem(sub, config, derive_seed(seed, it))
        before = a.energy
        accepted = result.energy < before - 1e-9 * max(1.0, abs(before))
        if accepted:
            changed = nodes[result.bits != a.bits[nodes]]
            a.bits[nodes] = result.bits
            a.energy = graph.energy(a.spins)
            affected = np.union1d(changed, A[changed].indices)
            s = a.spins.astype(float)
            g[affected] = s[affected] * (graph.h[affected] + A[affected] @ s)
            c = 0
        else:
            weight[nodes] *= 0.5
            c += 1
        if events is not None:
            events.append(
                {
                    "level": level,
                    "iteration": it,
                    "size": int(sub.n),
                    "solver": result.solver,
                    "energy_before": before,
                    "energy_after": a.energy,
                    "candidate_energy": result.energy,
                    "accepted": bool(accepted),
                    "qiro_rounds": len(result.details.get("rounds", [])),
                    "wall_time": time.perf_counter() - t0,
                }
            )
        it += 1
    return a


def _coarse_solve(graph: IsingGraph, config: PipelineConfig) -> SolveResult:
    if graph.n <= config.coarse_exact_max:
        return brute_force(graph)
    return local_search(graph, config.coarse_restarts, derive_seed(config.seed, 10**6))


def solve_pipeline(instance: UcpInstance, config: PipelineConfig | None = None) -> RunReport:
    config = config or PipelineConfig()
    start = time.perf_counter()
    qubo = compile_qubo(instance, config.penalties, config.demand_mode, config.min_down_mode)
    graph = qubo_to_ising(qubo)
    hierarchy = build_hierarchy(
        graph, config.coarsest_size, config.embed_dim, config.embed_iters, config.seed
    )
    L = hierarchy.depth
    coarse = _coarse_solve(hierarchy.levels[L], config)
    a = Assignment.from_bits(hierarchy.levels[L], coarse.bits)
    levels = [
        {
            "level": L,
            "nodes": hierarchy.levels[L].n,
            "solver": coarse.solver,
            "energy_before": a.energy,
            "energy_after": a.energy,
            "accepted": 0,
            "rejected": 0,
            "wall_time": coarse.wall_time,
        }
    ]
    coarse_energy = a.energy
    trace = [a.energy]

    bits0 = coarse.bits
    for l in reversed(range(L)):
        bits0 = bits0[hierarchy.matchings[l].cluster]
    coarse_objective = evaluate_schedule(
        instance, decode(qubo.varmap, bits0), config.penalties, config.demand_mode, config.min_down_mode
    ).penalized_objective

    events: list[dict] = []
    for l in reversed(range(L)):
        t0 = time.perf_counter()
        fine = hierarchy.levels[l]
        a = interpolate(a, hierarchy.matchings[l], fine)
        before = a.energy
        n_events = len(events)
        a = refine_level(fine, a, config, derive_seed(config.seed, l), events, level=l)
        mine = events[n_events:]
        trace.extend(e["energy_after"] for e in mine)
        levels.append(
            {
                "level": l,
                "nodes": fine.n,
                "solver": "refine",
                "energy_before": before,
                "energy_after": a.energy,
                "accepted": sum(e["accepted"] for e in mine),
                "rejected": sum(not e["accepted"] for e in mine),
                "wall_time": time.perf_counter() - t0,
            }
        )
        log.info("level %d (%d nodes): %.6g -> %.6g", l, fine.n, before, a.energy)

    schedule = decode(qubo.varmap, a.bits)
    costs = evaluate_schedule(instance, schedule, config.penalties, config.demand_mode, config.min_down_mode)
    return RunReport(
        config=config.to_dict(),
        sizes=hierarchy.sizes(),
        levels=levels,
        subproblems=events,
        energy_trace=trace,
        bits=a.bits.copy(),
        energy=a.energy,
        coarse_energy=coarse_energy,
        coarse_objective=coarse_objective,
        schedule=schedule,
        costs=costs,
        seed=config.seed,
        wall_time=time.perf_counter() - start,
        hierarchy=hierarchy.to_dict(),
    )


def _entry(instance, qubo, result: SolveResult, config: PipelineConfig) -> dict:
    schedule = decode(qubo.varmap, result.bits)
    costs = evaluate_schedule(instance, schedule, config.penalties, config.demand_mode, config.min_down_mode)
    return {
        "status": "ok",
        "solver": result.solver,
        "energy": result.energy,
        "seed": result.seed,
        "wall_time": result.wall_time,
        "schedule": schedule.to_dict(),
        "costs": costs.to_dict(),
    }


def run_baselines(instance: UcpInstance, config: PipelineConfig | None = None) -> dict:
    """Simulated annealing on the full problem, plus exact enumeration when it fits."""
    config = config or PipelineConfig()
    qubo = compile_qubo(instance, config.penalties, config.demand_mode, config.min_down_mode)
    graph = qubo_to_ising(qubo)
    seed = derive_seed(config.seed, 2 * 10**6)
    sa = simulated_annealing(graph, default_schedule(graph, seed, config.sa_sweeps), seed)
    out = {"simulated_annealing": _entry(instance, qubo, sa, config)}
    if graph.n <= BRUTE_FORCE_MAX:
        out["exact"] = _entry(instance, qubo, brute_force(graph), config)
    else:
        out["exact"] = {
            "status": "not run",
            "solver": "brute_force",
            "reason": f"{graph.n} variables exceeds the enumeration limit of {BRUTE_FORCE_MAX}",
        }
    return out


BENCH_COLUMNS = ["units", "horizon", "seed", "solver", "status", "energy", "generation_cost", "violations", "seconds"]


def _violations(costs: dict) -> int:
    return costs["startup_inconsistency_count"] + costs["min_up_violations"] + costs["min_down_violations"]


def bench(unit_counts, horizon: int, seeds, config: PipelineConfig | None = None) -> list[dict]:
    """One row per (instance, solver)."""
    from .model import generate_synthetic

    config = config or PipelineConfig()
    rows = []
    for n_units in unit_counts:
        for seed in seeds:
            instance = generate_synthetic(n_units, horizon, seed)
            run_config = PipelineConfig.from_dict({**config.to_dict(), "seed": seed})
            report = solve_pipeline(instance, run_config)
            rows.append(
                {
                    "units": n_units,
                    "horizon": horizon,
                    "seed": seed,
                    "solver": "multilevel_qaoa",
                    "status": "ok",
                    "energy": report.energy,
                    "generation_cost": report.costs.generation_cost,
                    "violations": _violations(report.costs.to_dict()),
                    "seconds": report.wall_time,
                }
            )
            for name, entry in run_baselines(instance, run_config).items():
                ok = entry["status"] == "ok"
                rows.append(
                    {
                        "units": n_units,
                        "horizon": horizon,
                        "seed": seed,
                        "solver": name,
                        "status": entry["status"],
                        "energy": entry["energy"] if ok else None,
                        "generation_cost": entry["costs"]["generation_cost"] if ok else None,
                        "violations": _violations(entry["costs"]) if ok else None,
                        "seconds": entry["wall_time"] if ok else None,
                    }
                )
    return rows

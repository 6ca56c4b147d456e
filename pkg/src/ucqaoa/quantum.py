"""State-vector QAOA on Ising graphs and recursive correlation-based reduction.

Qubit ``q`` is node ``q`` and the most significant bit of the basis index;
``Z`` has eigenvalue +1 on bit 0, matching the spin convention in
:mod:`ucqaoa.ising`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .classical import SolveResult, brute_force
from .errors import CapacityError, ConfigurationError
from .ising import IsingGraph, energy_table, spins_of

log = logging.getLogger(__name__)

MAX_QUBITS = 26
GRID = 4


@dataclass
class QaoaParams:
    gammas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=float))
        if self.gammas.shape != self.betas.shape or self.gammas.size < 1:
            raise ConfigurationError("need the same number (>= 1) of gammas and betas")
        if not (np.isfinite(self.gammas).all() and np.isfinite(self.betas).all()):
            raise ConfigurationError("QAOA angles must be finite")

    @property
    def layers(self) -> int:
        return self.gammas.size


@dataclass
class QiroConfig:
    min_size: int = 10
    n_max: int = 16
    shots: int = 10240
    budget: int = 200
    layers: int = 1
    exact_expectations: bool = False

    def __post_init__(self):
        if not 1 <= self.min_size <= self.n_max <= MAX_QUBITS:
            raise ConfigurationError(
                f"need 1 <= min_size <= n_max <= {MAX_QUBITS}, got {self.min_size}, {self.n_max}"
            )
        if self.shots < 1 or self.layers < 1:
            raise ConfigurationError("shots and layers must be >= 1")
        if self.budget < GRID * GRID:
            raise ConfigurationError(f"optimizer budget {self.budget} is below the {GRID * GRID} grid start points")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_size(graph, n_max):
    if graph.n > n_max:
        raise CapacityError(f"{graph.n} qubits exceeds the state-vector limit of {n_max}")


def cost_diagonal(graph: IsingGraph, n_max: int = MAX_QUBITS) -> np.ndarray:
    _check_size(graph, n_max)
    return energy_table(graph)


def _apply_mixer(psi: np.ndarray, n: int, beta: float) -> np.ndarray:
    # exp(-i beta X) = cos(beta) I - i sin(beta) X on every qubit
    c, s = np.cos(beta), -1j * np.sin(beta)
    psi = np.array(psi, dtype=complex)
    for q in range(n):
        v = psi.reshape(1 << q, 2, -1)
        a, b = v[:, 0, :], v[:, 1, :]
        new_a = c * a + s * b
        v[:, 1, :] = s * a + c * b
        v[:, 0, :] = new_a
    return psi


def evolve(diagonal: np.ndarray, n: int, params: QaoaParams) -> np.ndarray:
    psi = np.full(1 << n, 2.0 ** (-n / 2), dtype=complex)
    for gamma, beta in zip(params.gammas, params.betas):
        psi = psi * np.exp(-1j * gamma * diagonal)
        psi = _apply_mixer(psi, n, beta)
    return psi


def qaoa_state(graph: IsingGraph, params: QaoaParams, n_max: int = MAX_QUBITS) -> np.ndarray:
    return evolve(cost_diagonal(graph, n_max), graph.n, params)


def qaoa_expectation(graph: IsingGraph, params: QaoaParams, n_max: int = MAX_QUBITS) -> float:
    diag = cost_diagonal(graph, n_max)
    psi = evolve(diag, graph.n, params)
    return float(np.abs(psi) ** 2 @ diag)


def grid_points(layers: int = 1) -> list[np.ndarray]:
    """4x4 start grid over gamma in [0, pi), beta in [0, pi/2), repeated per layer."""
    pts = []
    for a in range(GRID):
        for b in range(GRID):
            gamma = (a + 0.5) * np.pi / GRID
            beta = (b + 0.5) * np.pi / (2 * GRID)
            pts.append(np.array([gamma] * layers + [beta] * layers))
    return pts


def optimize_angles(graph: IsingGraph, config: QiroConfig | None = None) -> tuple[QaoaParams, float]:
    """Grid multi-start followed by COBYLA from the best grid point.

    Angles are searched for the cost scaled to unit max coefficient; the
    returned gammas are converted back so that they act on ``graph`` itself.
    Returns ``(params, expectation)``.
    """
    config = config or QiroConfig()
    _check_size(graph, config.n_max)
    p = config.layers
    scale = graph.scale()
    diag = cost_diagonal(graph, config.n_max)
    unit = (diag - graph.offset) / scale if scale > 0 else np.zeros_like(diag)
    evals = 0
    best_x, best_val = None, np.inf

    def objective(x):
        nonlocal evals, best_x, best_val
        evals += 1
        psi = evolve(unit, graph.n, QaoaParams(x[:p], x[p:]))
        val = float(np.abs(psi) ** 2 @ unit)
        if val < best_val:
            best_x, best_val = np.array(x, dtype=float), val
        return val

    for x0 in grid_points(p):
        objective(x0)
    remaining = config.budget - evals
    if remaining >= 2 * p + 2 and scale > 0:
        minimize(objective, best_x.copy(), method="COBYLA", options={"maxiter": remaining, "rhobeg": 0.2})

    gammas = best_x[:p] / scale if scale > 0 else best_x[:p]
    params = QaoaParams(gammas, best_x[p:])
    return params, float(best_val * scale + graph.offset) if scale > 0 else graph.offset


def sample(state: np.ndarray, shots: int, seed: int = 0) -> dict[str, int]:
    if shots < 1:
        raise ConfigurationError("shots must be >= 1")
    n = int(np.log2(len(state)))
    probs = np.abs(state) ** 2
    probs /= probs.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probs)
    return {format(int(i), f"0{n}b"): int(counts[i]) for i in np.flatnonzero(counts)}


def _correlations_exact(probs, n, rows, cols):
    idx = np.arange(len(probs), dtype=np.int64)
    spins = 1.0 - 2.0 * ((idx[:, None] >> (n - 1 - np.arange(n))) & 1)
    single = probs @ spins
    pair = probs @ (spins[:, rows] * spins[:, cols])
    return single, pair


def _correlations_sampled(counts, n, rows, cols):
    keys = list(counts)
    weights = np.array([counts[k] for k in keys], dtype=float)
    weights /= weights.sum()
    bits = np.array([[c == "1" for c in k] for k in keys], dtype=np.int64).reshape(len(keys), n)
    spins = 1.0 - 2.0 * bits
    return weights @ spins, weights @ (spins[:, rows] * spins[:, cols])


class _Reducible:
    """Mutable Ising terms keyed by original node id."""

    def __init__(self, graph: IsingGraph):
        self.h = {i: float(v) for i, v in enumerate(graph.h)}
        self.w = graph.couplings()
        self.offset = graph.offset

    def graph(self):
        nodes = sorted(self.h)
        pos = {v: k for k, v in enumerate(nodes)}
        couplings = {(pos[i], pos[j]): w for (i, j), w in self.w.items()}
        return IsingGraph.from_terms(len(nodes), [self.h[v] for v in nodes], couplings, self.offset, nodes), nodes

    def fix(self, i, spin):
        self.offset += self.h.pop(i) * spin
        for (a, b) in [e for e in self.w if i in e]:
            w = self.w.pop((a, b))
            other = b if a == i else a
            self.h[other] += w * spin

    def merge(self, keep, drop, sign):
        """Substitute ``s_drop = sign * s_keep``."""
        self.h[keep] += sign * self.h.pop(drop)
        for (a, b) in [e for e in self.w if drop in e]:
            w = self.w.pop((a, b))
            other = b if a == drop else a
            if other == keep:
                self.offset += w * sign
                continue
            key = (min(keep, other), max(keep, other))
            self.w[key] = self.w.get(key, 0.0) + sign * w


def qiro_solve(graph: IsingGraph, config: QiroConfig | None = None, seed: int = 0) -> SolveResult:
    """Recursive QAOA reduction: fix or merge along the strongest correlation, then enumerate.

    One variable is eliminated per round until at most ``min_size`` remain.
    """
    config = config or QiroConfig()
    _check_size(graph, config.n_max)
    start = time.perf_counter()
    work = _Reducible(graph)
    substitutions = []
    rounds = []
    rng = np.random.SeedSequence(seed)
    while len(work.h) > config.min_size:
        current, nodes = work.graph()
        n = current.n
        params, expectation = optimize_angles(current, config)
        psi = qaoa_state(current, params, config.n_max)
        if config.exact_expectations:
            single, pair = _correlations_exact(np.abs(psi) ** 2, n, current.rows, current.cols)
        else:
            shot_seed = int(rng.spawn(1)[0].generate_state(1)[0])
            counts = sample(psi, config.shots, shot_seed)
            single, pair = _correlations_sampled(counts, n, current.rows, current.cols)

        # ties: singles before pairs, lower index first
        values = np.concatenate([single, pair])
        k = int(np.argmax(np.round(np.abs(values), 12)))
        value = float(values[k])
        sign = 1 if value >= 0 else -1
        if k < n:
            node = nodes[k]
            work.fix(node, sign)
            substitutions.append(("fix", node, None, sign))
            rounds.append({"kind": "fix", "nodes": [int(node)], "correlation": value, "size": n - 1})
        else:
            e = k - n
            a, b = nodes[current.rows[e]], nodes[current.cols[e]]
            work.merge(a, b, sign)
            substitutions.append(("merge", b, a, sign))
            rounds.append({"kind": "merge", "nodes": [int(a), int(b)], "correlation": value, "size": n - 1})
        log.debug("qiro round %d: %s, expectation %.6g", len(rounds), rounds[-1], expectation)

    base, nodes = work.graph()
    exact = brute_force(base)
    spins = np.zeros(graph.n, dtype=np.int64)
    spins[nodes] = spins_of(exact.bits)
    for kind, node, ref, sign in reversed(substitutions):
        spins[node] = sign if kind == "fix" else sign * spins[ref]
    bits = ((1 - spins) // 2).astype(np.int8)
    solver = "qiro" if rounds else "brute_force"
    return SolveResult(
        bits,
        graph.energy(spins),
        len(rounds),
        time.perf_counter() - start,
        solver,
        seed,
        details={"rounds": rounds},
    )

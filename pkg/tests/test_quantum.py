import numpy as np
import pytest
from conftest import random_graph
from oracles import dense_qaoa_state

from ucqaoa.classical import brute_force
from ucqaoa.errors import CapacityError, ConfigurationError
from ucqaoa.ising import IsingGraph, energy_table, index_to_bits, spins_of
from ucqaoa.quantum import (
    QaoaParams,
    QiroConfig,
    cost_diagonal,
    optimize_angles,
    qaoa_expectation,
    qaoa_state,
    qiro_solve,
    sample,
)

EDGE = IsingGraph.from_terms(2, None, {(0, 1): 1.0})


def test_cost_diagonal_single_qubit():
    g = IsingGraph.from_terms(1, [1.0], {})
    np.testing.assert_array_equal(cost_diagonal(g), [1.0, -1.0])
    np.testing.assert_array_equal(cost_diagonal(IsingGraph.from_terms(3, None, {}, 2.5)), [2.5] * 8)


def test_cost_diagonal_per_basis_state():
    g = random_graph(8, np.random.default_rng(0), offset=0.3)
    diag = cost_diagonal(g)
    for b in range(256):
        assert diag[b] == pytest.approx(g.energy(spins_of(index_to_bits(b, 8))), abs=1e-12)


def test_capacity_limit():
    g = IsingGraph.from_terms(5, None, {})
    with pytest.raises(CapacityError):
        cost_diagonal(g, n_max=4)
    with pytest.raises(CapacityError):
        qiro_solve(g, QiroConfig(min_size=2, n_max=4))


def test_zero_angles_uniform():
    g = random_graph(5, np.random.default_rng(1))
    psi = qaoa_state(g, QaoaParams([0.0], [0.0]))
    assert np.all(psi == 2 ** (-5 / 2))


@pytest.mark.parametrize("seed", range(8))
def test_state_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    g = random_graph(n, rng, offset=rng.normal())
    p = int(rng.integers(1, 4))
    params = QaoaParams(rng.uniform(0, np.pi, p), rng.uniform(0, np.pi, p))
    psi = qaoa_state(g, params)
    want = dense_qaoa_state(n, g.h, g.couplings(), g.offset, params.gammas, params.betas)
    assert np.abs(psi - want).max() <= 1e-8
    assert abs(np.linalg.norm(psi) - 1) <= 1e-9


def test_expectation_uniform_average():
    g = IsingGraph.from_terms(4, None, {(0, 1): 2.0, (1, 3): -1.0}, 0.75)
    assert qaoa_expectation(g, QaoaParams([0.0], [0.0])) == pytest.approx(0.75, abs=1e-12)


def test_single_edge_grid_oracle_reaches_minus_one():
    best = min(
        qaoa_expectation(EDGE, QaoaParams([g], [b]))
        for g in np.linspace(0, np.pi, 81)
        for b in np.linspace(0, np.pi / 2, 41)
    )
    assert best <= -1 + 1e-6


def test_optimize_single_edge():
    params, value = optimize_angles(EDGE)
    assert value <= -0.99
    assert qaoa_expectation(EDGE, params) == pytest.approx(value, abs=1e-9)


def test_optimize_flat_landscape_returns_seed_point():
    g = IsingGraph.from_terms(3, None, {}, 1.5)
    params, value = optimize_angles(g)
    assert value == 1.5
    assert params.gammas[0] == pytest.approx(np.pi / 8) and params.betas[0] == pytest.approx(np.pi / 16)


def test_optimize_deterministic_and_bounded():
    rng = np.random.default_rng(2)
    g = random_graph(6, rng, offset=1.0)
    p1, v1 = optimize_angles(g)
    p2, v2 = optimize_angles(g)
    assert np.array_equal(p1.gammas, p2.gammas) and np.array_equal(p1.betas, p2.betas) and v1 == v2
    assert v1 >= brute_force(g).energy - 1e-9
    # never worse than any grid start
    scale = g.scale()
    for a in range(4):
        for b in range(4):
            start = QaoaParams([(a + 0.5) * np.pi / 4 / scale], [(b + 0.5) * np.pi / 8])
            assert v1 <= qaoa_expectation(g, start) + 1e-9


def test_variational_bound():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = random_graph(int(rng.integers(2, 9)), rng)
        params = QaoaParams(rng.uniform(0, np.pi, 2), rng.uniform(0, np.pi, 2))
        assert qaoa_expectation(g, params) >= energy_table(g).min() - 1e-9


def test_config_validation():
    with pytest.raises(ConfigurationError):
        QiroConfig(min_size=20, n_max=16)
    with pytest.raises(ConfigurationError):
        QiroConfig(n_max=30)
    with pytest.raises(ConfigurationError):
        QiroConfig(budget=10)


def test_sample_basis_and_uniform():
    zero = np.zeros(8, dtype=complex)
    zero[0] = 1
    assert sample(zero, 100, 0) == {"000": 100}
    uniform = np.full(4, 0.5, dtype=complex)
    counts = sample(uniform, 10_240, 1)
    assert sum(counts.values()) == 10_240
    sigma = np.sqrt(10_240 * 0.25 * 0.75)
    for key in ("00", "01", "10", "11"):
        assert abs(counts[key] - 2560) <= 5 * sigma
    assert sample(uniform, 50, 7) == sample(uniform, 50, 7)
    with pytest.raises(ConfigurationError):
        sample(uniform, 0)


def test_qiro_base_case_is_brute_force():
    g = random_graph(8, np.random.default_rng(4))
    res = qiro_solve(g, QiroConfig(min_size=10))
    bf = brute_force(g)
    assert res.bits.tolist() == bf.bits.tolist() and res.energy == bf.energy
    assert res.iterations == 0


@pytest.mark.parametrize("exact", [True, False])
def test_qiro_two_node_merge(exact):
    g = IsingGraph.from_terms(2, None, {(0, 1): 1.0}, 0.25)
    res = qiro_solve(g, QiroConfig(min_size=1, exact_expectations=exact), seed=0)
    first = res.details["rounds"][0]
    assert first["kind"] == "merge" and first["correlation"] < 0
    assert res.energy == pytest.approx(-1 + 0.25)
    assert res.bits[0] != res.bits[1]


def test_qiro_fix_path_and_exact_energy():
    # strong bias makes a single-spin expectation dominate
    g = IsingGraph.from_terms(3, [5.0, 0.0, 0.0], {(1, 2): 0.1})
    res = qiro_solve(g, QiroConfig(min_size=1, exact_expectations=True))
    assert res.details["rounds"][0]["kind"] == "fix"
    assert res.energy == pytest.approx(g.energy(spins_of(res.bits)))
    assert res.energy == pytest.approx(brute_force(g).energy)


def test_qiro_quality_and_termination():
    ratios = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        g = random_graph(12, rng)
        table = energy_table(g)
        res = qiro_solve(g, QiroConfig(), seed)
        assert res.iterations <= 12 - 10
        sizes = [r["size"] for r in res.details["rounds"]]
        assert all(b < a for a, b in zip([12] + sizes, sizes))
        assert res.energy == pytest.approx(g.energy(spins_of(res.bits)), abs=1e-9)
        ratios.append((table.max() - res.energy) / (table.max() - table.min()))
    assert np.median(ratios) >= 0.9


def test_qiro_deterministic():
    g = random_graph(12, np.random.default_rng(9))
    a, b = qiro_solve(g, QiroConfig(min_size=8), 5), qiro_solve(g, QiroConfig(min_size=8), 5)
    assert a.bits.tolist() == b.bits.tolist() and a.details == b.details

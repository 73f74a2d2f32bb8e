import copy

import numpy as np
import pytest
from scipy.stats import chisquare

from recipnet import (
    ResourceLimit,
    SimConfig,
    degree_histogram,
    init_graph,
    run,
    step,
    validate_params,
)
from recipnet.simulate import sample_endpoint
from conftest import random_params


class ScriptedRng:
    """Feeds predetermined uniforms to step(); mimics Generator.random."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, size=None):
        if size is None:
            return self.values.pop(0)
        out = np.array([self.values.pop(0) for _ in range(size)])
        return out


def test_init_graph_self_loop(k1_ref):
    state = init_graph(k1_ref, np.random.default_rng(0))
    assert state.n_nodes == 1
    assert state.in_deg[1] == 1 and state.out_deg[1] == 1
    assert state.edge_count == 1
    assert state.in_pool == [1] and state.out_pool == [1]
    state.check_invariants()


def test_init_group_deterministic_k1(k1_ref):
    for seed in range(5):
        state = init_graph(k1_ref, np.random.default_rng(seed))
        assert state.node_group[1] == 0


def test_init_group_reproducible():
    p = validate_params(alpha=0.5, delta=1.0, pi=[0.3, 0.7], rho=np.zeros((2, 2)))
    g1 = init_graph(p, np.random.default_rng(123)).node_group[1]
    g2 = init_graph(p, np.random.default_rng(123)).node_group[1]
    assert g1 == g2


def test_forced_scenario1_with_reciprocation(k1_ref):
    state = init_graph(k1_ref, np.random.default_rng(0))
    # scenario 1 (u0 < alpha), any mixture/index (single target), group 0,
    # reciprocation success (u4 < 0.5)
    edges = []
    step(state, k1_ref, ScriptedRng([0.0, 0.0, 0.0, 0.0, 0.0]), edges=edges)
    assert state.n == 1
    assert state.edge_count == 3
    assert (state.in_deg[1], state.out_deg[1]) == (2, 2)
    assert (state.in_deg[2], state.out_deg[2]) == (1, 1)
    assert [(e.source, e.target, e.reciprocal) for e in edges] == [
        (2, 1, False), (1, 2, True)]
    state.check_invariants()


def test_forced_scenario2_without_reciprocation(k1_ref):
    state = init_graph(k1_ref, np.random.default_rng(0))
    # scenario 2 (u0 >= alpha), reciprocation failure (u4 >= 0.5)
    step(state, k1_ref, ScriptedRng([0.9, 0.0, 0.0, 0.0, 0.9]))
    assert state.edge_count == 2
    assert (state.in_deg[1], state.out_deg[1]) == (1, 2)
    assert (state.in_deg[2], state.out_deg[2]) == (1, 0)
    state.check_invariants()


def test_always_reciprocate_edge_count():
    p = validate_params(alpha=0.5, delta=1.0, pi=[1.0], rho=[[1.0]])
    result = run(p, SimConfig(n_steps=200, seed=7))
    assert result.state.edge_count == 2 * 200 + 1


def test_never_reciprocate_edge_count():
    p = validate_params(alpha=0.5, delta=1.0, pi=[1.0], rho=[[0.0]])
    result = run(p, SimConfig(n_steps=200, seed=7))
    assert result.state.edge_count == 200 + 1
    assert result.state.reciprocal_count == 0


def test_run_deterministic_same_seed(k2_ref):
    a = run(k2_ref, SimConfig(n_steps=500, seed=42, emit_edges=True))
    b = run(k2_ref, SimConfig(n_steps=500, seed=42, emit_edges=True))
    assert a.edges == b.edges
    assert a.state.in_deg == b.state.in_deg
    assert a.state.node_group == b.state.node_group


def test_run_matches_step_reference(k2_ref):
    n = 400
    result = run(k2_ref, SimConfig(n_steps=n, seed=9, emit_edges=True))
    rng = np.random.default_rng(9)
    state = init_graph(k2_ref, rng)
    edges = [result.edges[0]]  # step-0 self-loop record
    for _ in range(n):
        step(state, k2_ref, rng, edges=edges)
    assert state.in_deg == result.state.in_deg
    assert state.out_deg == result.state.out_deg
    assert state.node_group == result.state.node_group
    assert state.edge_count == result.state.edge_count
    assert state.reciprocal_count == result.state.reciprocal_count
    assert state.group_in_edges == result.state.group_in_edges
    assert state.group_out_edges == result.state.group_out_edges
    assert edges == result.edges


def test_invariants_random_params_and_seeds():
    rng = np.random.default_rng(77)
    for _ in range(40):
        p = random_params(rng)
        seed = int(rng.integers(0, 2**63))
        result = run(p, SimConfig(n_steps=120, seed=seed))
        result.state.check_invariants()
        # exact identity: extra edges beyond one-per-step are reciprocations
        st = result.state
        assert st.edge_count - (st.n + 1) == st.reciprocal_count


def test_invariants_after_every_step(k2_ref):
    rng = np.random.default_rng(5)
    state = init_graph(k2_ref, rng)
    for _ in range(60):
        step(state, k2_ref, rng)
        state.check_invariants()


def test_endpoint_sampling_distribution_chi_square(k1_ref):
    # frozen 10-node state; compare 1e6 draws with the exact offset law
    result = run(k1_ref, SimConfig(n_steps=9, seed=3))
    st = result.state
    E, V, delta = st.edge_count, st.n_nodes, k1_ref.delta
    rng = np.random.default_rng(1234)
    n_draws = 1_000_000
    u = rng.random((n_draws, 2))
    counts = np.zeros(V + 1, dtype=np.int64)
    pool = st.in_pool
    for i in range(n_draws):
        counts[sample_endpoint(pool, V, E, delta, u[i, 0], u[i, 1])] += 1
    expected = np.array([
        n_draws * (st.in_deg[v] + delta) / (E + delta * V) for v in range(1, V + 1)
    ])
    stat, p_value = chisquare(counts[1:], expected)
    assert p_value > 1e-3


def _recip_trajectory(params, seed, n):
    snaps = tuple(range(1, n + 1))
    result = run(params, SimConfig(n_steps=n, seed=seed, snapshot_steps=snaps))
    # |E(k)| - (k+1) equals the reciprocation successes up to step k
    return result.trajectory.total_edges - (result.trajectory.steps + 1)


def test_monotone_coupling_k1():
    # same seed => shared uniforms; a single group compares the same rho
    # entry every step, so successes are pathwise monotone in rho
    for seed in (1, 2, 3, 4, 5):
        lo = validate_params(alpha=0.5, delta=1.0, pi=[1.0], rho=[[0.2]])
        hi = validate_params(alpha=0.5, delta=1.0, pi=[1.0], rho=[[0.6]])
        r_lo = _recip_trajectory(lo, seed, 300)
        r_hi = _recip_trajectory(hi, seed, 300)
        assert np.all(r_hi >= r_lo)


def test_monotone_coupling_constant_matrix():
    # constant matrices keep the comparison rho-entry independent of the
    # (possibly diverged) target group, so monotonicity is again pathwise
    rng = np.random.default_rng(10)
    for _ in range(5):
        K = int(rng.integers(2, 4))
        pi = rng.dirichlet(np.ones(K))
        c_lo = float(rng.uniform(0.0, 0.5))
        c_hi = float(rng.uniform(c_lo, 1.0))
        seed = int(rng.integers(0, 2**32))
        lo = validate_params(alpha=0.4, delta=0.7, pi=pi / pi.sum(),
                             rho=np.full((K, K), c_lo))
        hi = validate_params(alpha=0.4, delta=0.7, pi=pi / pi.sum(),
                             rho=np.full((K, K), c_hi))
        assert np.all(_recip_trajectory(hi, seed, 200) >= _recip_trajectory(lo, seed, 200))


def test_monotone_coupling_dominating_matrices():
    # max entry of the low matrix <= min entry of the high matrix
    rng = np.random.default_rng(11)
    for _ in range(5):
        K = 2
        pi = [0.5, 0.5]
        lo_m = rng.uniform(0.0, 0.4, (K, K))
        hi_m = rng.uniform(0.6, 1.0, (K, K))
        seed = int(rng.integers(0, 2**32))
        lo = validate_params(alpha=0.6, delta=1.5, pi=pi, rho=lo_m)
        hi = validate_params(alpha=0.6, delta=1.5, pi=pi, rho=hi_m)
        assert np.all(_recip_trajectory(hi, seed, 200) >= _recip_trajectory(lo, seed, 200))


def test_degree_histogram_init(k1_ref):
    state = init_graph(k1_ref, np.random.default_rng(0))
    hist = degree_histogram(state)
    assert hist.n_nodes == 1
    assert [tuple(p) for p in hist.pairs] == [(1, 1)]
    assert list(hist.counts) == [1]


def test_degree_histogram_forced_trace(k1_ref):
    state = init_graph(k1_ref, np.random.default_rng(0))
    step(state, k1_ref, ScriptedRng([0.0, 0.0, 0.0, 0.0, 0.0]))
    hist = degree_histogram(state)
    as_dict = {tuple(p): c for p, c in zip(hist.pairs, hist.counts)}
    assert as_dict == {(2, 2): 1, (1, 1): 1}


def test_degree_histogram_conservation(k2_ref):
    result = run(k2_ref, SimConfig(n_steps=500, seed=21))
    hist = degree_histogram(result.state)
    assert hist.counts.sum() == result.state.n + 1
    for g in range(k2_ref.K):
        assert hist.group_counts[g].sum() == result.state.group_node_counts[g]
    grid, overflow = hist.to_pmf(15, 15)
    assert abs(grid.sum() + overflow - 1.0) <= 1e-12


def test_resource_limit():
    p = validate_params(alpha=0.5, delta=1.0, pi=[1.0], rho=[[0.5]])
    with pytest.raises(ResourceLimit):
        run(p, SimConfig(n_steps=10_000, seed=0, max_edges=100))


def test_sim_config_rejects_zero_steps():
    with pytest.raises(ValueError):
        SimConfig(n_steps=0)


def test_single_step_run(k1_ref):
    result = run(k1_ref, SimConfig(n_steps=1, seed=0))
    st = result.state
    assert st.n_nodes == 2
    assert st.edge_count in (2, 3)


def test_snapshot_validation(k1_ref):
    with pytest.raises(ValueError):
        run(k1_ref, SimConfig(n_steps=10, seed=0, snapshot_steps=(11,)))


def test_trajectory_matches_state(k2_ref):
    n = 100
    result = run(k2_ref, SimConfig(n_steps=n, seed=13, snapshot_steps=(50, n)))
    assert list(result.trajectory.steps) == [50, n]
    assert result.trajectory.total_edges[-1] == result.state.edge_count
    assert list(result.trajectory.group_in[-1]) == result.state.group_in_edges
    assert list(result.trajectory.group_out[-1]) == result.state.group_out_edges


def test_step_does_not_mutate_on_copy(k1_ref):
    state = init_graph(k1_ref, np.random.default_rng(0))
    before = copy.deepcopy(state.__dict__)
    clone = copy.deepcopy(state)
    step(clone, k1_ref, np.random.default_rng(1))
    assert state.__dict__ == before

import math

import numpy as np
import pytest

from recipnet import (
    EventBudgetExceeded,
    LimitPairSampler,
    estimate_pkl,
    group_rates,
    sample_limit_pair,
    simulate_mbi,
    simulate_mbi_batch,
    solve_equilibrium,
    validate_params,
)
from recipnet.params import ModelParams


def _raw_params(alpha, delta, pi, rho):
    """Unvalidated params for out-of-domain probes (e.g. delta = 0)."""
    pi = np.asarray(pi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    return ModelParams(alpha=alpha, gamma=1.0 - alpha, delta=delta,
                       K=len(pi), pi=pi, rho=rho)


def test_t_end_zero_returns_init(k1_ref):
    rates = group_rates(k1_ref)
    st = simulate_mbi(0, (2, 3), 0.0, k1_ref, rates, np.random.default_rng(0))
    assert (st.n1, st.n2) == (2, 3)
    assert st.events == 0


def test_yule_mean_growth():
    # delta=0, rho=0, init (1,0): n1 is a pure birth process with rate
    # alpha, so E[n1(t)] = exp(alpha t)
    alpha, t = 0.5, 3.0
    p = _raw_params(alpha, 0.0, [1.0], [[0.0]])
    rates = group_rates(p)
    rng = np.random.default_rng(2024)
    n_runs = 100_000
    total = 0
    for _ in range(n_runs):
        st = simulate_mbi(0, (1, 0), t, p, rates, rng)
        total += st.n1
    mean = total / n_runs
    expect = math.exp(alpha * t)
    # geometric law: var = (1-p)/p^2 with p = exp(-alpha t)
    pgeo = math.exp(-alpha * t)
    se = math.sqrt((1.0 - pgeo) / pgeo**2 / n_runs)
    assert abs(mean - expect) <= 3.0 * se


def test_full_reciprocity_preserves_difference():
    p = _raw_params(0.5, 0.0, [1.0], [[1.0]])
    rates = group_rates(p)
    rng = np.random.default_rng(5)
    for init in ((1, 0), (3, 1), (2, 2)):
        st = simulate_mbi(0, init, 4.0, p, rates, rng)
        assert st.n1 - st.n2 == init[0] - init[1]


def test_immigration_count_is_poisson():
    # immigration arrivals are Poisson(delta * t) regardless of splits
    delta, t = 1.5, 2.0
    p = validate_params(alpha=0.5, delta=delta, pi=[1.0], rho=[[0.0]])
    rates = group_rates(p)
    rng = np.random.default_rng(31)
    n_runs = 3000
    counts = np.empty(n_runs)
    for i in range(n_runs):
        counts[i] = simulate_mbi(0, (0, 0), t, p, rates, rng).immigrations
    lam = delta * t
    se_mean = math.sqrt(lam / n_runs)
    assert abs(counts.mean() - lam) <= 3.0 * se_mean
    se_var = lam * math.sqrt(2.0 / (n_runs - 1))
    assert abs(counts.var(ddof=1) - lam) <= 3.0 * se_var


def test_event_budget_exceeded_carries_state(k1_ref):
    rates = group_rates(k1_ref)
    with pytest.raises(EventBudgetExceeded) as err:
        simulate_mbi(0, (1, 1), 50.0, k1_ref, rates,
                     np.random.default_rng(0), event_budget=10)
    assert err.value.state.events == 10


def test_batch_budget_marks_failed(k1_ref):
    rates = group_rates(k1_ref)
    rng = np.random.default_rng(0)
    inits = np.ones((50, 2), dtype=np.int64)
    n1, n2, events, failed = simulate_mbi_batch(
        0, inits, np.full(50, 50.0), k1_ref, rates, rng, event_budget=5)
    assert failed.all()
    assert np.all(events <= 5)


def _exact_mbi_mean(params, rates, m, init, t_end):
    """Mean of (n1, n2) from the linear mean ODE, solved independently."""
    from scipy.integrate import solve_ivp

    a, g, d = params.alpha, params.gamma, params.delta
    rr, rc = float(rates.rho_row[m]), float(rates.rho_col[m])
    p11 = a * rr + g * rc
    imm = np.array([a * (1 - rr) + p11, g * (1 - rc) + p11])

    def f(_, mvec):
        n1, n2 = mvec
        return [a * n1 + g * n2 * rc + d * imm[0],
                a * n1 * rr + g * n2 + d * imm[1]]

    sol = solve_ivp(f, (0.0, t_end), list(map(float, init)),
                    rtol=1e-10, atol=1e-12)
    return sol.y[:, -1]


def test_engines_match_exact_mean_and_each_other(k2_ref):
    # the two engines implement one law; check both against the exact mean
    # ODE and against each other on the joint pmf
    rates = group_rates(k2_ref)
    t_end, reps, grid_max = 0.8, 50_000, 14
    exact = _exact_mbi_mean(k2_ref, rates, 0, (1, 1), t_end)

    rng = np.random.default_rng(100)
    seq = np.zeros((grid_max + 1, grid_max + 1))
    over_seq = 0
    seq_n1 = np.empty(reps)
    seq_n2 = np.empty(reps)
    for i in range(reps):
        st = simulate_mbi(0, (1, 1), t_end, k2_ref, rates, rng)
        seq_n1[i], seq_n2[i] = st.n1, st.n2
        if st.n1 <= grid_max and st.n2 <= grid_max:
            seq[st.n1, st.n2] += 1
        else:
            over_seq += 1

    rng = np.random.default_rng(200)
    inits = np.ones((reps, 2), dtype=np.int64)
    n1, n2, _, failed = simulate_mbi_batch(
        0, inits, np.full(reps, t_end), k2_ref, rates, rng)
    assert not failed.any()

    for sample, target in ((seq_n1, exact[0]), (seq_n2, exact[1]),
                           (n1, exact[0]), (n2, exact[1])):
        se = sample.std(ddof=1) / np.sqrt(reps)
        assert abs(sample.mean() - target) <= 4.0 * se

    bat = np.zeros_like(seq)
    inside = (n1 <= grid_max) & (n2 <= grid_max)
    np.add.at(bat, (n1[inside], n2[inside]), 1)
    over_bat = int((~inside).sum())
    tv = 0.5 * np.abs(seq / reps - bat / reps).sum() + 0.5 * abs(over_seq - over_bat) / reps
    assert tv <= 0.03


def test_growth_ratio_concentrates_on_slope():
    # group 0: rho_row=0.30, rho_col=0.55 gives lambda ~ 0.703 > log 2 and
    # slope a = sqrt(0.165)/0.55
    p = validate_params(alpha=0.5, delta=1.0, pi=[0.5, 0.5],
                        rho=[[0.6, 0.0], [0.5, 0.5]])
    rates = group_rates(p)
    lam = 0.5 * (1.0 + math.sqrt(4 * 0.25 * 0.30 * 0.55))
    assert lam > math.log(2.0)
    a = (math.sqrt(4 * 0.25 * 0.30 * 0.55)) / (2 * 0.5 * 0.55)

    rng = np.random.default_rng(999)
    n_runs = 1000
    inits = np.ones((n_runs, 2), dtype=np.int64)
    n1, n2, _, failed = simulate_mbi_batch(
        0, inits, np.full(n_runs, 15.0), p, rates, rng, event_budget=10_000_000)
    assert not failed.any()
    ratio = n2 / n1
    assert np.median(np.abs(ratio - a)) <= 0.05


def test_event_increment_bounds(k2_ref):
    # every event adds 1 or 2 to the total count, so the growth is
    # bracketed by the event counter: events <= added <= 2 * events
    rates = group_rates(k2_ref)
    rng = np.random.default_rng(17)
    for _ in range(200):
        init = (int(rng.integers(0, 3)), int(rng.integers(1, 3)))
        st = simulate_mbi(int(rng.integers(0, 2)), init, float(rng.uniform(0, 2)),
                          k2_ref, rates, rng)
        assert st.n1 >= init[0] and st.n2 >= init[1]
        added = st.n1 + st.n2 - init[0] - init[1]
        assert st.events <= added <= 2 * st.events or (added == 0 and st.events == 0)
        assert st.immigrations <= st.events


def test_limit_sampler_init_distribution_k1(k1_ref):
    sol = solve_equilibrium(k1_ref)
    sampler = LimitPairSampler.from_solution(k1_ref, sol)
    assert sampler.c_star == pytest.approx(2.5, abs=1e-12)
    # q_in = q_out = 0.5 at x = y = 1.5, so (0,1) w.p. 0.25, (1,0) w.p.
    # 0.25, (1,1) w.p. 0.5
    assert np.allclose(sampler.init_probs[0], [0.25, 0.25, 0.5], atol=1e-12)
    assert sampler.draw_init(0, 0.10) == (0, 1)
    assert sampler.draw_init(0, 0.30) == (1, 0)
    assert sampler.draw_init(0, 0.90) == (1, 1)


def test_limit_pair_never_zero_zero(k1_ref):
    sol = solve_equilibrium(k1_ref)
    rates = group_rates(k1_ref)
    sampler = LimitPairSampler.from_solution(k1_ref, sol, rates)
    rng = np.random.default_rng(8)
    for _ in range(500):
        k, l = sample_limit_pair(0, sampler, k1_ref, rates, rng)
        assert k + l >= 1


def test_estimate_pkl_mass_accounting(k1_ref):
    sol = solve_equilibrium(k1_ref)
    est = estimate_pkl(k1_ref, sol, replicates=20_000, kmax=10, lmax=10, seed=5)
    assert est.failed == 0
    assert est.grid.sum() + est.overflow_mass == pytest.approx(1.0, abs=1e-12)
    assert est.grid[0, 0] == 0.0
    # group grids mix to the overall grid exactly in counts
    assert np.array_equal(est.group_counts.sum(axis=0),
                          (est.grid * est.successes).round().astype(np.int64))


def test_estimate_pkl_deterministic_and_worker_invariant(k2_ref):
    sol = solve_equilibrium(k2_ref)
    a = estimate_pkl(k2_ref, sol, replicates=30_000, kmax=8, lmax=8, seed=9,
                     chunk_size=8192, workers=1)
    b = estimate_pkl(k2_ref, sol, replicates=30_000, kmax=8, lmax=8, seed=9,
                     chunk_size=8192, workers=2)
    assert np.array_equal(a.group_counts, b.group_counts)
    assert np.array_equal(a.group_overflow_counts, b.group_overflow_counts)
    c = estimate_pkl(k2_ref, sol, replicates=30_000, kmax=8, lmax=8, seed=9,
                     chunk_size=8192)
    assert np.array_equal(a.group_counts, c.group_counts)


def test_estimate_pkl_failed_accounting(k1_ref):
    sol = solve_equilibrium(k1_ref)
    est = estimate_pkl(k1_ref, sol, replicates=5000, kmax=6, lmax=6, seed=3,
                       event_budget=1)
    assert est.failed > 0
    assert est.successes + est.failed == 5000
    assert est.grid.sum() + est.overflow_mass == pytest.approx(1.0, abs=1e-12)


def test_estimate_pkl_rejects_bad_replicates(k1_ref):
    sol = solve_equilibrium(k1_ref)
    with pytest.raises(ValueError):
        estimate_pkl(k1_ref, sol, replicates=0, kmax=5, lmax=5)


def test_estimate_pkl_warns_without_regularity():
    # zero reciprocity breaks the positivity flags; the estimate still
    # runs but is not a certified limit
    p = validate_params(alpha=0.5, delta=1.0, pi=[1.0], rho=[[0.0]])
    sol = solve_equilibrium(p)
    assert not sol.regular.star
    with pytest.warns(RuntimeWarning):
        est = estimate_pkl(p, sol, replicates=500, kmax=5, lmax=5, seed=1)
    assert est.grid.sum() + est.overflow_mass == pytest.approx(1.0, abs=1e-12)

import math

import numpy as np
import pytest

import oracles
from subspacecomp import falg
from subspacecomp.errors import BudgetError, InputError
from subspacecomp.sim import (
    CSV_HEADER,
    NestedEncoderSet,
    SimConfig,
    conditional_cost,
    random_block_of_rank,
    rate_sweep,
    simulate_cc,
    simulate_cc_side_info,
    simulate_nested,
    syndrome_collision_rate,
)
from subspacecomp.source import FamilySpec, make_family

h = oracles.h
EX1 = make_family(FamilySpec.parse("example1:p1=0.1,p2=0.2"))
W1 = falg.span(2, 4, [[1, 1, 0, 0], [0, 1, 1, 0]])
W2 = W1 + falg.span(2, 4, [[0, 0, 1, 1]])
KM = make_family(FamilySpec.parse("opt_ss:m=2,p=0.11"))
SUM2 = falg.span(2, 2, [[1, 1]])


def test_config_validation_and_k():
    assert SimConfig(n=20, rate_bits=0.5).k_for(2) == 10
    assert SimConfig(n=20, rate_bits=0.5).k_for(3) == math.ceil(20 * 0.5 / math.log2(3))
    assert SimConfig(n=7, k=3).k_for(2) == 3
    with pytest.raises(InputError):
        SimConfig(n=0)
    with pytest.raises(InputError):
        SimConfig(n=4, k=5)
    with pytest.raises(InputError):
        SimConfig(n=4, trials=0)
    with pytest.raises(InputError):
        SimConfig(n=4, matrix_mode="sometimes")
    with pytest.raises(InputError):
        SimConfig(n=4).k_for(2)


def test_rate_above_field_size_is_clamped_with_warning():
    with pytest.warns(UserWarning, match="clamping"):
        assert SimConfig(n=10, rate_bits=3.0).k_for(2) == 10


def test_conditional_cost_table():
    d = KM
    cost = conditional_cost(d, np.zeros((0, 2), dtype=int), SUM2.matrix)
    assert cost.shape == (1, 2)
    assert np.allclose(2.0 ** -cost, [[0.89, 0.11]])
    side = np.array([[1, 0]])
    cost = conditional_cost(d, side, np.array([[0, 1]]))
    # X2 given X1: equal with probability 0.89
    assert np.allclose(2.0 ** -cost, [[0.89, 0.11], [0.11, 0.89]])


def test_identity_encoder_never_fails():
    for d, w in [(KM, SUM2), (EX1, W2), (make_family(FamilySpec.parse("random:q=3,m=2,seed=2")), falg.full(3, 2))]:
        n = 6
        cfg = SimConfig(n=n, k=n, trials=50, matrix_mode="fixed", fixed_matrix=np.eye(n, dtype=int))
        res = simulate_cc(d, w, cfg)
        assert res.failures == 0 and res.coset_log_q == (0.0, 0.0, 0.0)


def test_no_syndrome_means_blind_guess():
    # with k = 0 the ML word is the all-zero block, right with probability 0.89^n
    n, trials = 8, 4000
    res = simulate_cc(KM, SUM2, SimConfig(n=n, k=0, trials=trials, seed=3))
    expect = 1 - 0.89**n
    sigma = math.sqrt(expect * (1 - expect) / trials)
    assert abs(res.pe - expect) < 4 * sigma


def test_result_fields():
    res = simulate_cc(KM, SUM2, SimConfig(n=10, rate_bits=0.6, trials=300, seed=1))
    assert 0 <= res.failures <= res.trials == 300
    assert res.pe == res.failures / res.trials
    lo, hi = res.wilson_ci_95
    assert lo <= res.pe <= hi
    assert res.coset_log_q[0] <= res.coset_log_q[1] <= res.coset_log_q[2] <= 10 - res.k + 10


def test_reproducible_and_backend_independent():
    cfg = SimConfig(n=12, rate_bits=0.6, trials=200, seed=42)
    a = simulate_cc(EX1, W1, cfg)
    b = simulate_cc(EX1, W1, cfg)
    assert a == b
    c = simulate_cc(EX1, W1, cfg, backend="python")
    assert (c.failures, c.coset_log_q) == (a.failures, a.coset_log_q)
    assert simulate_cc(EX1, W1, SimConfig(n=12, rate_bits=0.6, trials=200, seed=43)) != a


def test_fixed_matrix_mode_reproducible():
    cfg = SimConfig(n=10, rate_bits=0.6, trials=200, seed=5, matrix_mode="fixed")
    assert simulate_cc(KM, SUM2, cfg) == simulate_cc(KM, SUM2, cfg)


def test_ternary_field_runs():
    d = make_family(FamilySpec.parse("random:q=3,m=2,seed=7"))
    w = falg.span(3, 2, [[1, 2]])
    lo = simulate_cc(d, w, SimConfig(n=6, k=1, trials=200, seed=0))
    hi = simulate_cc(d, w, SimConfig(n=6, k=5, trials=200, seed=0))
    assert hi.failures < lo.failures


def test_budget_guard():
    with pytest.raises(BudgetError, match="reduce n - k"):
        simulate_cc(EX1, falg.span(2, 4, [[1, 1, 1, 1]]), SimConfig(n=40, rate_bits=0.1, trials=1))
    with pytest.raises(BudgetError):
        simulate_cc(EX1, W2, SimConfig(n=12, k=4, trials=1, decoder_budget=2**20))


def test_zero_target_rejected():
    with pytest.raises(InputError):
        simulate_cc(KM, falg.zero(2, 2), SimConfig(n=4, k=2, trials=1))


# -- side information ---------------------------------------------------------------------


def test_side_info_with_nothing_known_is_plain_cc():
    cfg = SimConfig(n=10, rate_bits=0.7, trials=300, seed=9)
    assert simulate_cc_side_info(EX1, W2, falg.zero(2, 4), cfg) == simulate_cc(EX1, W2, cfg)


def test_side_info_must_be_proper_subspace():
    cfg = SimConfig(n=8, k=4, trials=1)
    with pytest.raises(InputError):
        simulate_cc_side_info(EX1, W2, W2, cfg)
    with pytest.raises(InputError):
        simulate_cc_side_info(EX1, W1, falg.span(2, 4, [[0, 0, 0, 1]]), cfg)


def test_side_info_helps_at_equal_rate():
    cfg = SimConfig(n=16, rate_bits=1.25 * h(0.2), trials=2000, seed=11)
    with_side = simulate_cc_side_info(EX1, W2, W1, cfg)
    without = simulate_cc(EX1, W2, cfg)
    assert with_side.failures < without.failures


# -- nested codes -------------------------------------------------------------------------


def test_nested_encoder_set():
    rng = np.random.default_rng(0)
    enc = NestedEncoderSet.draw(2, 10, [3, 3, 7], lambda l: rng)
    assert enc.ks == [3, 3, 7]
    assert enc.stacked(1).shape == (3, 10) and enc.stacked(3).shape == (7, 10)
    assert np.array_equal(enc.stacked(3)[:3], enc.stacked(1))
    with pytest.raises(InputError):
        NestedEncoderSet.draw(2, 10, [4, 2], lambda l: rng)


def test_nested_single_stage_is_plain_cc():
    cfg = SimConfig(n=12, trials=300, seed=4)
    res = simulate_nested(EX1, W1, cfg)
    assert len(res.stages) == 1
    direct = simulate_cc(EX1, W1, SimConfig(n=12, rate_bits=1.2 * h(0.1), trials=300, seed=4))
    assert res.stages[0] == direct and res.end_to_end.failures == direct.failures


def test_nested_union_bound_and_ordering():
    for seed in range(3):
        res = simulate_nested(EX1, W2, SimConfig(n=12, trials=400, seed=seed))
        fails = [s.failures for s in res.stages]
        assert max(fails) <= res.end_to_end.failures <= sum(fails)
        assert res.union_bound_holds


def test_nested_stage_rates_must_match_chain_length():
    with pytest.raises(InputError):
        simulate_nested(EX1, W2, SimConfig(n=8, trials=1), stage_rates=[0.6])


@pytest.mark.slow
def test_nested_stages_improve_with_blocklength():
    rates = [1.2 * h(0.1), 1.2 * h(0.2)]
    runs = [simulate_nested(EX1, W2, SimConfig(n=n, trials=1000, seed=2), stage_rates=rates) for n in (8, 16)]
    for stage in range(2):
        assert runs[1].stages[stage].pe < 0.5
        assert runs[1].stages[stage].pe < runs[0].stages[stage].pe


# -- sweeps ---------------------------------------------------------------------------------


def test_single_point_sweep_wraps_single_run():
    cfg = SimConfig(n=10, rate_bits=0.0, trials=200, seed=6)
    table = rate_sweep(KM, SUM2, "cc", [10], [0.6], cfg)
    assert table.results[(10, 0.6)] == simulate_cc(KM, SUM2, SimConfig(n=10, rate_bits=0.6, trials=200, seed=6))
    assert table.to_csv().splitlines()[0] == ",".join(CSV_HEADER)
    assert table.monotone_fraction() == 1.0


def test_sweep_relative_rates_and_rows():
    cfg = SimConfig(n=12, rate_bits=0.0, trials=200, seed=1)
    table = rate_sweep(KM, SUM2, "ss", [8, 12], [0.7, 1.0, 1.3], cfg, relative=True)
    assert table.rates == pytest.approx([0.7 * h(0.11), h(0.11), 1.3 * h(0.11)])
    assert len(table.rows()) == 6
    assert table.pe_matrix().shape == (2, 3)
    assert 0 <= table.monotone_fraction() <= 1


def test_sweep_nested_scheme_and_bad_scheme():
    cfg = SimConfig(n=8, rate_bits=0.0, trials=50, seed=1)
    table = rate_sweep(EX1, W2, "nc", [8], [1.2], cfg, relative=True)
    assert table.results[(8, table.rates[0])].k == math.ceil(8 * 1.2 * h(0.2) - 1e-9)
    with pytest.raises(InputError):
        rate_sweep(EX1, W2, "xx", [8], [1.0], cfg)


def test_sweep_csv_is_deterministic():
    cfg = SimConfig(n=10, rate_bits=0.0, trials=100, seed=3)
    a = rate_sweep(KM, SUM2, "cc", [6, 10], [0.4, 0.8], cfg).to_csv()
    b = rate_sweep(KM, SUM2, "cc", [6, 10], [0.4, 0.8], cfg).to_csv()
    assert a == b


# -- random-coding identity ------------------------------------------------------------------


def test_random_block_rank():
    rng = np.random.default_rng(0)
    for q, n, s, r in [(2, 6, 3, 2), (3, 5, 2, 2), (2, 4, 3, 0)]:
        b = random_block_of_rank(q, n, s, r, rng)
        assert b.shape == (n, s) and falg.rank(b, q) == r
    with pytest.raises(InputError):
        random_block_of_rank(2, 3, 2, 3, rng)


@pytest.mark.parametrize("q,k,s,r", [(2, 1, 1, 1), (2, 2, 2, 1), (3, 1, 2, 2)])
def test_collision_rate(q, k, s, r):
    rng = np.random.default_rng([q, k, s, r])
    delta = random_block_of_rank(q, 8, s, r, rng)
    trials = 20000
    got = syndrome_collision_rate(q, k, delta, trials, rng)
    p = q ** (-k * r)
    assert abs(got - p) <= 4 * math.sqrt(p * (1 - p) / trials)

import io
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from mbat import capacity
from mbat.capacity import (
    CSV_COLUMNS,
    CapacityParams,
    analyze,
    binomial_se,
    bound_recognition_moments,
    error_free_prob,
    pair_error,
    plate_bound,
    recognition_moments,
    required_dimension,
    simulate_capacity,
    simulation_row,
    tail_prob,
    write_csv,
    z_value,
)
from mbat.binding import as_matrix, make_binding
from mbat.errors import InvalidArgument, SolverLimit

mpmath.mp.dps = 50


def mp_tail(x):
    return float(mpmath.ncdf(-x))


def order_statistics_p(D, S, N):
    """P(min of S member scores > max of N distractor scores), scores independent normals."""
    a = stats.norm(D, math.sqrt((S - 1) * D)) if S > 1 else None
    r = stats.norm(0, math.sqrt(S * D))
    if a is None:
        return float(r.cdf(D) ** N)
    f = lambda x: S * a.pdf(x) * a.sf(x) ** (S - 1) * r.cdf(x) ** N  # noqa: E731
    lo, hi = D - 12 * a.std(), D + 12 * a.std()
    return integrate.quad(f, lo, hi, limit=200)[0]


@given(st.floats(-8, 37))
def test_tail_prob_matches_mpmath(x):
    expected = mp_tail(x)
    assert tail_prob(x) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def test_tail_prob_anchor_points():
    assert tail_prob(0) == 0.5
    assert tail_prob(4.8) == pytest.approx(1 / 1_259_000, rel=0.01)
    assert tail_prob(-1.0) + tail_prob(1.0) == pytest.approx(1.0)


def test_z_and_pair_error():
    assert z_value(899, 20) == pytest.approx(math.sqrt(899 / 39))
    assert pair_error(899, 20) == pytest.approx(mp_tail(math.sqrt(899 / 39)), rel=1e-12)


def test_small_system_error_free():
    # a pairwise error around 4e-7 over 20,000 comparisons leaves ~1.6% risk
    lin, exact = error_free_prob(899, 20, 1000)
    assert 0.980 <= lin <= 0.988
    assert exact >= lin
    assert required_dimension(20, 1000, 0.984) == pytest.approx(899, abs=1)


@pytest.mark.parametrize(
    "S,N,p,expected,tol",
    [(20, 1000, 0.984, 899, 1), (100, 10**5, 0.982, 6927, 5), (1000, 10**6, 0.99, 90_000, 500)],
)
def test_required_dimension_table(S, N, p, expected, tol):
    assert abs(required_dimension(S, N, p) - expected) <= tol


@given(S=st.integers(1, 500), N=st.integers(1, 10**6), p=st.floats(0.01, 0.999))
def test_required_dimension_is_minimal(S, N, p):
    d = required_dimension(S, N, p)
    assert error_free_prob(d, S, N)[0] >= p
    if d > 1:
        assert error_free_prob(d - 1, S, N)[0] < p


@given(S=st.integers(1, 200), N=st.integers(1, 10**5), p1=st.floats(0.01, 0.99), p2=st.floats(0.01, 0.99))
def test_required_dimension_monotone_in_target(S, N, p1, p2):
    lo, hi = sorted([p1, p2])
    assert required_dimension(S, N, lo) <= required_dimension(S, N, hi)


def test_required_dimension_errors():
    with pytest.raises(InvalidArgument):
        required_dimension(20, 1000, 1.0)
    with pytest.raises(SolverLimit):
        required_dimension(10**8, 10**6, 0.99)


@given(D=st.integers(1, 10**6), S=st.integers(1, 1000), N=st.integers(1, 10**6))
def test_error_free_bounds(D, S, N):
    lin, exact = error_free_prob(D, S, N)
    assert 0.0 <= lin <= exact <= 1.0


@given(D=st.integers(1, 10**5), S=st.integers(1, 500), N=st.integers(1, 10**5))
def test_error_free_monotone(D, S, N):
    lin, exact = error_free_prob(D, S, N)
    assert error_free_prob(D + 50, S, N)[1] >= exact
    assert error_free_prob(D, S + 1, N)[1] <= exact
    assert error_free_prob(D, S, N + 1)[1] <= exact
    assert error_free_prob(D + 50, S, N)[0] >= lin


@pytest.mark.parametrize("S,N,expected", [(20, 10**3, 2000), (100, 10**5, 13_000), (1000, 10**6, 148_000)])
def test_plate_bound(S, N, expected):
    bound, floor = plate_bound(S, N, 0.01)
    assert bound == pytest.approx(expected, rel=0.05)
    assert floor == pytest.approx(2 * (S + 1) / math.pi)
    # the bound is sufficient, so it sits above the formula's estimate
    assert bound > required_dimension(S, N, 0.99)


def test_analyze_cell():
    rep = analyze(CapacityParams(899, 20, 1000, q=0.016))
    assert rep.requiredD == pytest.approx(899, abs=1)
    assert rep.Z == pytest.approx(z_value(899, 20))
    assert rep.errorFreeLinearized <= rep.errorFreeExact
    rep = analyze(CapacityParams(1000, 10**8, 10**6))
    assert rep.requiredD is None


def test_params_validation():
    with pytest.raises(InvalidArgument):
        CapacityParams(0, 1, 1)
    with pytest.raises(InvalidArgument):
        CapacityParams(10, 1, 1, q=0)


def test_recognition_moments_monte_carlo():
    d, s, trials = 1000, 20, 1000
    g = np.random.default_rng(1)
    member, other = np.empty(trials), np.empty(trials)
    for t in range(trials):
        vs = g.choice([-1.0, 1.0], size=(s + 1, d))
        v = vs[:s].sum(0)
        member[t], other[t] = vs[0] @ v, vs[s] @ v
    m = recognition_moments(d, s)
    for x, mean, var in [(member, m["member_mean"], m["member_var"]), (other, 0.0, m["nonmember_var"])]:
        assert abs(x.mean() - mean) <= 5 * math.sqrt(var / trials)
        assert abs(x.var(ddof=1) - var) <= 5 * var * math.sqrt(2 / (trials - 1))


def test_bound_moments_reduce_to_plain():
    assert bound_recognition_moments(np.eye(50), 7) == {
        "member_mean": 50.0,
        "member_var": 6 * 50.0,
        "nonmember_mean": 0.0,
        "nonmember_var": 7 * 50.0,
    }


def test_bound_moments_monte_carlo():
    d, s, trials = 200, 10, 2000
    m = as_matrix(make_binding(3, "M", d, normalization="none")) / math.sqrt(d)
    g = np.random.default_rng(2)
    x = g.choice([-1.0, 1.0], size=(trials, s + 1, d))
    bound_v = x[:, :s].sum(1) @ m.T
    member = np.einsum("ij,ij->i", x[:, 0] @ m.T, bound_v)
    other = np.einsum("ij,ij->i", x[:, s] @ m.T, bound_v)
    mo = bound_recognition_moments(m, s)
    for xs, mean, var in [(member, mo["member_mean"], mo["member_var"]), (other, 0.0, mo["nonmember_var"])]:
        assert abs(xs.mean() - mean) <= 5 * math.sqrt(var / trials)
        assert abs(xs.var(ddof=1) - var) <= 5 * var * math.sqrt(2 / (trials - 1))


def test_simulation_exact_single_vector_case():
    # S = 1: a distractor ties only when it equals the bundle, so p = (1 - 2^-D)^N
    D, N, trials = 4, 5, 4000
    res = simulate_capacity(CapacityParams(D, 1, N), trials, master_seed=11)
    p = (1 - 2.0**-D) ** N
    assert abs(res.fracErrorFreeTrials - p) <= 4 * binomial_se(p, trials)
    assert res.fracBundledInTopS == 1.0


@pytest.mark.parametrize("D,S,N", [(300, 5, 200), (400, 10, 300)])
def test_simulation_matches_order_statistics(D, S, N):
    trials = 600
    res = simulate_capacity(CapacityParams(D, S, N), trials, master_seed=5)
    p = order_statistics_p(D, S, N)
    assert abs(res.fracErrorFreeTrials - p) <= 4 * binomial_se(p, trials) + 0.02


def test_order_statistics_oracle_sanity():
    # tends to the exact product formula as the member spread vanishes
    assert order_statistics_p(400, 1, 100) == pytest.approx(stats.norm.cdf(400 / math.sqrt(400)) ** 100)


def test_simulation_deterministic_and_worker_invariant(monkeypatch):
    params = CapacityParams(200, 8, 100)
    one = simulate_capacity(params, 40, 3, workers=1)
    many = simulate_capacity(params, 40, 3, workers=4)
    assert one == many
    monkeypatch.setenv("MBAT_THREADS", "3")
    assert simulate_capacity(params, 40, 3) == one
    assert simulate_capacity(params, 40, 4) != one


def test_trial_float32_matches_float64(monkeypatch):
    # the float32 fast path must agree with a float64 recomputation
    D, S, N = 500, 20, 300
    in_top, ok = capacity._trial(D, S, N, 9, 0)
    words = capacity.rng.raw_words(capacity.rng.mix(9, 0), ("capacity",), (S + N) * 8).reshape(S + N, 8)
    vecs = capacity.rng.words_to_signs(words, D)
    dots = vecs @ vecs[:S].sum(0)
    assert ok == (dots[:S].min() > dots[S:].max())
    assert in_top == int(np.count_nonzero(np.argsort(-dots, kind="stable")[:S] < S))


def test_simulation_monotone_in_dimension():
    fr = [simulate_capacity(CapacityParams(d, 10, 200), 100, 1).fracBundledInTopS for d in (100, 300, 600)]
    assert fr[0] < fr[1] < fr[2]


def test_simulation_rejects_zero_trials():
    with pytest.raises(InvalidArgument):
        simulate_capacity(CapacityParams(10, 1, 1), 0, 0)


def test_csv_output():
    res = simulate_capacity(CapacityParams(100, 5, 20), 10, 2)
    text = write_csv([simulation_row(res)], header_lines=["mbat test", "config: x"])
    lines = text.splitlines()
    assert lines[0] == "# mbat test" and lines[1] == "# config: x"
    assert lines[2] == ",".join(CSV_COLUMNS)
    row = dict(zip(CSV_COLUMNS, lines[3].split(",")))
    assert int(row["D"]) == 100 and float(row["fracErrorFreeTrials"]) == res.fracErrorFreeTrials
    buf = io.StringIO()
    assert write_csv([simulation_row(res)], stream=buf) == ""
    assert buf.getvalue() == "\n".join(lines[2:]) + "\n"

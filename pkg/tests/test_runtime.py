import math

import numpy as np
import pytest
from scipy.linalg import expm

from chaosfilter.galerkin import GalerkinSystem, integrate_galerkin_sde_paths
from chaosfilter.hermite import build_basis, project
from chaosfilter.propagator import cosine_basis, precompute_table
from chaosfilter.runtime import (DegenerateNormalizationError, FilterState, ObservationWindow,
                                 advance, cut_windows, density_at, estimate, functional,
                                 negative_mass_fraction, read_observations, run_filter,
                                 step_matrix, write_observations, xi_integrals)

from conftest import gaussian_p0


def make_window(delta=1.0, npts=129, fn=None, r=1):
    t = np.linspace(0.0, delta, npts)
    y = np.zeros((npts, r)) if fn is None else np.asarray(fn(t), dtype=float).reshape(npts, r)
    return ObservationWindow(0.0, delta, t, y)


def scalar_table(b=0.5, delta=1.0, N=1, n=1):
    sys_ = GalerkinSystem(K=1, r=1, A=np.array([[0.0]]), B=np.array([[[b]]]),
                          basis=build_basis(1, 1))
    return precompute_table(sys_, cosine_basis(delta, max(n, 1)), N, n)


def test_window_validation():
    t = np.linspace(0, 1, 65)
    with pytest.raises(ValueError, match="uniform"):
        ObservationWindow(0.0, 1.0, np.concatenate([t[:32], t[33:]]), np.zeros((64, 1)))
    with pytest.raises(ValueError, match="increasing"):
        ObservationWindow(0.0, 1.0, t[::-1], np.zeros((65, 1)))
    with pytest.raises(ValueError, match="span"):
        ObservationWindow(0.0, 2.0, t, np.zeros((65, 1)))


def test_xi_integrals_constant_path_is_exactly_zero():
    tb = cosine_basis(1.0, 6)
    win = make_window(fn=lambda t: 3.7 * np.ones_like(t))
    xi = xi_integrals(win, tb)
    for (k, l), v in xi.items():
        assert abs(v) < 1e-12, (k, l)


def test_xi_integrals_linear_path():
    tb = cosine_basis(1.0, 2)
    win = make_window(fn=lambda t: t)
    xi = xi_integrals(win, tb)
    assert xi[(1, 1)] == pytest.approx(1.0, rel=1e-14)
    assert abs(xi[(2, 1)]) < 1e-4


def test_xi_integrals_trapezoid_refinement_second_order():
    tb = cosine_basis(1.0, 4)
    fn = lambda t: np.sin(2.1 * t) + 0.3 * t * t
    exact = {}
    x, w = np.polynomial.legendre.leggauss(256)
    s, ws = 0.5 * (x + 1), 0.5 * w
    dfn = lambda t: 2.1 * np.cos(2.1 * t) + 0.6 * t
    for k in (2, 3, 4):
        exact[k] = float(np.sum(ws * tb.eval(k, s) * dfn(s)))
    errs = {}
    for npts in (129, 257):
        xi = xi_integrals(make_window(npts=npts, fn=fn), tb)
        errs[npts] = max(abs(xi[(k, 1)] - exact[k]) for k in (2, 3, 4))
    assert errs[129] / errs[257] == pytest.approx(4.0, rel=0.15)


def test_xi_integrals_rejects_coarse_sampling():
    tb = cosine_basis(1.0, 8)
    win = make_window(npts=17)    # spacing 1/16 > 1/(8*8)
    with pytest.raises(ValueError, match="8 n"):
        xi_integrals(win, tb)


def test_step_matrix_n0_is_matrix_exponential(ou_system_k8):
    tb = cosine_basis(0.25, 1)
    table = precompute_table(ou_system_k8, tb, 0, 1, substeps=256)
    rng = np.random.default_rng(0)
    xi = {(1, 1): rng.normal()}
    Q = step_matrix(table, xi)
    assert np.max(np.abs(Q - expm(ou_system_k8.A * 0.25))) < 1e-10


def test_step_matrix_zero_integrals_at_N1(ou_system_k8):
    tb = cosine_basis(0.25, 2)
    table = precompute_table(ou_system_k8, tb, 1, 2, substeps=256)
    xi = {(1, 1): 0.0, (2, 1): 0.0}
    Q = step_matrix(table, xi)
    assert np.max(np.abs(Q - expm(ou_system_k8.A * 0.25))) < 1e-10


def test_step_matrix_scalar_one_mode():
    b, delta = 0.5, 1.0
    table = scalar_table(b=b, delta=delta)
    dY = 0.37
    xi = {(1, 1): dY / math.sqrt(delta)}
    Q = step_matrix(table, xi)
    assert Q[0, 0] == pytest.approx(1.0 + b * dY, rel=1e-12)


def test_advance_identity_and_composition():
    s0 = FilterState(t=0.0, p=np.array([1.0, 2.0]))
    s1 = advance(s0, np.eye(2), 0.5)
    assert s1.t == 0.5 and np.array_equal(s1.p, s0.p)
    rng = np.random.default_rng(3)
    Q1, Q2 = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    two = advance(advance(s0, Q1, 0.5), Q2, 0.5)
    one = advance(s0, Q2 @ Q1, 1.0)
    assert np.allclose(two.p, one.p, rtol=1e-14)
    assert two.t == one.t


def test_advance_scalar_window_reproduces_increment():
    b, delta = 0.5, 1.0
    table = scalar_table(b=b, delta=delta)
    tb = cosine_basis(delta, 1)
    win = make_window(fn=lambda t: 0.2 * t)    # dY over window = 0.2
    xi = xi_integrals(win, tb)
    state = advance(FilterState(0.0, np.array([2.0])), step_matrix(table, xi), delta)
    assert state.p[0] == pytest.approx(2.0 * (1.0 + b * 0.2), rel=1e-12)


def test_density_synthesis(grid64):
    basis = build_basis(1, 6)
    zero = FilterState(0.0, np.zeros(6))
    xs = np.linspace(-2, 2, 9)
    assert np.array_equal(density_at(zero, basis, xs[:, None]), np.zeros(9))
    e1 = FilterState(0.0, np.eye(6)[0])
    vals = density_at(e1, basis, xs[:, None])
    assert vals[4] == pytest.approx(math.pi ** -0.25, rel=1e-12)
    # projected Gaussian stays L2-close to the true density
    coeffs = project(gaussian_p0, basis, grid64)
    st = FilterState(0.0, coeffs)
    synth = density_at(st, basis, grid64.nodes)
    l2 = math.sqrt(np.sum(grid64.weights * (synth - gaussian_p0(grid64.nodes[:, 0])) ** 2))
    assert l2 < 5e-3


def test_functional_examples(grid64):
    basis = build_basis(1, 6)
    coeffs = project(gaussian_p0, basis, grid64)
    st = FilterState(0.0, coeffs)
    assert functional(st, np.zeros(6)) == 0.0
    assert functional(st, np.eye(6)[0]) == pytest.approx(coeffs[0])
    one = project(lambda x: np.ones_like(x), basis, grid64)
    mass = functional(st, one)
    assert mass == pytest.approx(1.0, abs=2e-3)


def test_estimate_identities(grid64):
    basis = build_basis(1, 6)
    st = FilterState(0.0, project(gaussian_p0, basis, grid64))
    one = project(lambda x: np.ones_like(x), basis, grid64)
    f = project(lambda x: x, basis, grid64)
    assert estimate(st, one, one) == 1.0
    base = estimate(st, f, one)
    for c in (1e-3, 1.0, 1e3):
        scaled = FilterState(0.0, c * st.p)
        assert estimate(scaled, f, one) == pytest.approx(base, rel=1e-13)
    with pytest.raises(DegenerateNormalizationError):
        estimate(FilterState(0.0, np.zeros(6)), f, one)
    with pytest.raises(DegenerateNormalizationError):
        estimate(st, f, one, floor=10.0)


def test_pipeline_linearity(ou_system_k8):
    tb = cosine_basis(0.25, 2)
    table = precompute_table(ou_system_k8, tb, 2, 2)
    rng = np.random.default_rng(8)
    xi = {(1, 1): rng.normal(), (2, 1): rng.normal()}
    Q = step_matrix(table, xi)
    p1, p2 = rng.normal(size=8), rng.normal(size=8)
    a, b = 0.3, -1.7
    lhs = advance(FilterState(0.0, a * p1 + b * p2), Q, 0.25).p
    rhs = a * advance(FilterState(0.0, p1), Q, 0.25).p + b * advance(FilterState(0.0, p2), Q, 0.25).p
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(lhs)))
    f = rng.normal(size=8)
    assert functional(FilterState(0.0, a * p1 + b * p2), f) == pytest.approx(
        a * functional(FilterState(0.0, p1), f) + b * functional(FilterState(0.0, p2), f),
        rel=1e-12)


def test_negative_mass_fraction_diagnostic(grid64):
    basis = build_basis(1, 4)
    pos = FilterState(0.0, project(gaussian_p0, basis, grid64))
    assert negative_mass_fraction(pos, basis, grid64) < 0.05
    wobble = FilterState(0.0, np.array([0.0, 1.0, 0.0, 0.0]))
    assert 0.4 < negative_mass_fraction(wobble, basis, grid64) <= 0.5


def test_cut_windows_shares_endpoints():
    t = np.linspace(0.0, 1.0, 101)
    y = np.sin(t)[:, None]
    wins = cut_windows(t, y, 0.25)
    assert len(wins) == 4
    assert wins[0].times[-1] == wins[1].times[0]
    assert wins[0].values.shape == (26, 1)
    with pytest.raises(ValueError, match="multiple"):
        cut_windows(t, y, 0.3001)


def test_run_filter_replay_determinism(ou_system_k8, ou_p_init_k8, grid64, tmp_path):
    delta = 0.25
    tb = cosine_basis(delta, 2)
    table = precompute_table(ou_system_k8, tb, 2, 2)
    rng = np.random.default_rng(123)
    nsteps = 64 * 4
    t = np.linspace(0, 1.0, nsteps + 1)
    y = np.concatenate([[0.0], np.cumsum(rng.normal(scale=math.sqrt(1.0 / nsteps), size=nsteps))])
    f = project(lambda x: x, ou_system_k8.basis, grid64)
    one = project(lambda x: np.ones_like(x), ou_system_k8.basis, grid64)
    wins = cut_windows(t, y[:, None], delta)
    r1 = run_filter(table, tb, ou_p_init_k8, wins, f_coeffs=f, one_coeffs=one)
    r2 = run_filter(table, tb, ou_p_init_k8, wins, f_coeffs=f, one_coeffs=one)
    assert np.array_equal(r1.states, r2.states)
    assert np.array_equal(r1.estimates, r2.estimates)
    assert r1.states.shape == (5, 8)


def test_observation_file_round_trip(tmp_path):
    t = np.linspace(0.0, 0.5, 11)
    y = np.stack([np.sin(t), np.cos(t)], axis=1)
    path = tmp_path / "obs.txt"
    write_observations(path, 0.05, t, y)
    delta_obs, r, t2, y2 = read_observations(path)
    assert delta_obs == 0.05 and r == 2
    assert np.array_equal(t, t2) and np.array_equal(y, y2)
    # rewrite is byte-identical
    path2 = tmp_path / "obs2.txt"
    write_observations(path2, 0.05, t2, y2)
    assert path.read_bytes() == path2.read_bytes()


def test_one_window_agreement_with_fine_grid_oracle(ou_system_k8, ou_p_init_k8):
    # light version of the scaling benchmark: the recursion state tracks
    # the fine-grid integration, and more chaos layers help
    delta, nsteps, npaths = 0.5, 1024, 64
    rng = np.random.default_rng(99)
    dW = rng.normal(scale=math.sqrt(delta / nsteps), size=(npaths, nsteps))
    Y = np.concatenate([np.zeros((npaths, 1)), np.cumsum(dW, axis=1)], axis=1)
    fine = integrate_galerkin_sde_paths(ou_system_k8, Y, delta / nsteps, ou_p_init_k8)
    t = np.linspace(0, delta, nsteps + 1)
    mses = {}
    for N in (1, 3):
        tb = cosine_basis(delta, 4)
        table = precompute_table(ou_system_k8, tb, N, 4)
        errs = []
        for p in range(npaths):
            win = ObservationWindow(0.0, delta, t, Y[p][:, None])
            Q = step_matrix(table, xi_integrals(win, tb))
            errs.append(np.sum((Q @ ou_p_init_k8 - fine[p]) ** 2))
        mses[N] = np.mean(errs)
    assert mses[3] < 0.2 * mses[1]
    assert mses[3] < 1e-2

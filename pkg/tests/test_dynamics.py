import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from lics import _kernel
from lics.dynamics import (
    AmplitudeState,
    DimensionalParams,
    IntegratorConfig,
    SystemParams,
    integrate,
    rhs,
    scale_to_dimensionless,
)
from lics.errors import StiffnessError, ValidationError
from lics.pulses import InstantCouplings, PulseSchedule, evaluate_envelope


# ---------------------------------------------------------------- rhs

def test_rhs_decoupled_is_stationary():
    state = AmplitudeState(0.3 + 0.1j, -0.5j, 0.7)
    d = rhs(state, InstantCouplings(), SystemParams())
    assert d == (0, 0, 0, 0)


def test_rhs_rabi_substitution():
    da_m, da_n, da_f, dW = rhs(AmplitudeState(a_m=1), InstantCouplings(g_mn=2), SystemParams())
    assert da_n == -2j
    assert da_m == 0 and da_f == 0 and dW == 0


def _symbolic_rhs(values):
    """Reduced equations typed in independently with sympy."""
    am, an, af = sp.symbols("a_m a_n a_f")
    gmn, gnn, gff, gnf = sp.symbols("g_mn g_nn g_ff g_nf", real=True)
    em, en, ef, dmn, dnf, qnn, qff, qnf = sp.symbols("eta_m eta_n eta_f D_mn D_nf q_nn q_ff q_nf", real=True)
    I = sp.I
    exprs = [
        -I * gmn * an - (em + I * (dmn - dnf)) * am,
        -I * gmn * am - gnf * (1 + I * qnf) * af - (en + gnn + I * (dnf + qnn * gnn)) * an,
        -gnf * (1 + I * qnf) * an - (ef + gff + I * qff * gff) * af,
        2 * (gnn * an * sp.conjugate(an) + gff * af * sp.conjugate(af)
             + 2 * sp.re(gnf * an * sp.conjugate(af))),
    ]
    subs = {sym: values.get(str(sym), 0) for sym in
            (am, an, af, gmn, gnn, gff, gnf, em, en, ef, dmn, dnf, qnn, qff, qnf)}
    return [complex(sp.N(e.subs(subs))) for e in exprs]


def test_rhs_fig2_couplings_against_symbolic():
    values = {"a_n": 1, "g_nn": 3.61, "g_nf": 5.89, "q_nf": 10}
    expected = _symbolic_rhs(values)
    got = rhs(AmplitudeState(a_n=1), InstantCouplings(g_nn=3.61, g_nf=5.89), SystemParams(q_nf=10))
    # frozen from the symbolic evaluation
    assert expected[1] == pytest.approx(-3.61)
    assert expected[2] == pytest.approx(-5.89 - 58.9j)
    assert expected[3] == pytest.approx(7.22)
    for g, e in zip(got, expected):
        assert complex(g) == pytest.approx(e, abs=1e-12)


@given(
    st.lists(st.floats(-1, 1), min_size=6, max_size=6),
    st.lists(st.floats(0, 10), min_size=4, max_size=4),
    st.lists(st.floats(0, 1), min_size=3, max_size=3),
    st.lists(st.floats(-10, 10), min_size=5, max_size=5),
)
def test_rhs_matches_symbolic_and_kernel(amps, gs, etas, rest):
    state = AmplitudeState(complex(*amps[0:2]), complex(*amps[2:4]), complex(*amps[4:6]))
    couplings = InstantCouplings(*gs)
    params = SystemParams(*etas, *rest)
    got = rhs(state, couplings, params)
    dy = np.empty(7)
    _kernel.deriv_from_couplings(state.to_vector(), *gs, params.as_vector(), dy)
    assert complex(dy[0], dy[1]) == pytest.approx(got[0], abs=1e-12)
    assert complex(dy[2], dy[3]) == pytest.approx(got[1], abs=1e-12)
    assert complex(dy[4], dy[5]) == pytest.approx(got[2], abs=1e-12)
    assert dy[6] == pytest.approx(got[3], abs=1e-12)


def test_rhs_symbolic_random_point(rng):
    names = ["g_mn", "g_nn", "g_ff", "g_nf", "eta_m", "eta_n", "eta_f", "D_mn", "D_nf", "q_nn", "q_ff", "q_nf"]
    vals = dict(zip(names, rng.uniform(0.1, 3.0, len(names))))
    amps = rng.normal(size=6)
    vals.update(a_m=complex(*amps[:2]), a_n=complex(*amps[2:4]), a_f=complex(*amps[4:]))
    expected = _symbolic_rhs(vals)
    got = rhs(
        AmplitudeState(vals["a_m"], vals["a_n"], vals["a_f"]),
        InstantCouplings(vals["g_mn"], vals["g_nn"], vals["g_ff"], vals["g_nf"]),
        SystemParams(vals["eta_m"], vals["eta_n"], vals["eta_f"], vals["D_mn"], vals["D_nf"],
                     vals["q_nn"], vals["q_ff"], vals["q_nf"]),
    )
    for g, e in zip(got, expected):
        assert complex(g) == pytest.approx(e, rel=1e-12)


def test_rhs_rejects_non_finite_inputs():
    bad_state = SimpleNamespace(a_m=complex(math.nan, 0), a_n=0j, a_f=0j)
    with pytest.raises(ValidationError, match="a_m"):
        rhs(bad_state, InstantCouplings(), SystemParams())
    bad_coupling = SimpleNamespace(g_mn=0.0, g_nn=math.inf, g_ff=0.0, g_nf=0.0)
    with pytest.raises(ValidationError, match="g_nn"):
        rhs(AmplitudeState(a_m=1), bad_coupling, SystemParams())


def test_state_rejects_non_finite():
    with pytest.raises(ValidationError, match="a_f"):
        AmplitudeState(a_f=complex(0, math.inf))


# ---------------------------------------------------------------- integrate

def test_two_level_rabi():
    cfg = IntegratorConfig(t_start=0.0, t_end=math.pi / 4)
    traj = integrate(InstantCouplings(g_mn=2.0), SystemParams(), AmplitudeState(a_m=1), cfg, sampling=9)
    assert abs(traj.final.a_m) ** 2 == pytest.approx(0.0, abs=1e-6)
    np.testing.assert_allclose(traj.populations[:, 0], np.cos(2.0 * traj.times) ** 2, atol=1e-8)


def test_pure_exponential_decay():
    cfg = IntegratorConfig(t_start=0.0, t_end=1.0)
    traj = integrate(InstantCouplings(), SystemParams(eta_n=0.12), AmplitudeState(a_n=1), cfg)
    assert abs(traj.final.a_n) ** 2 == pytest.approx(math.exp(-0.24), abs=1e-9)


def _scipy_reference(schedule, params, init, lo, hi):
    """Independent reference: scipy DOP853 on the complex system at tight tolerance."""
    env = schedule.envelope()
    p = params

    def f(T, a):
        gmn, gnn, gff, gnf = (float(v) for v in evaluate_envelope(env, T))
        am, an, af = a[:3]
        cross = gnf * (1 + 1j * p.q_nf)
        return [
            -1j * gmn * an - (p.eta_m + 1j * (p.delta_mn - p.delta_nf)) * am,
            -1j * gmn * am - cross * af - (p.eta_n + gnn + 1j * (p.delta_nf + p.q_nn * gnn)) * an,
            -cross * an - (p.eta_f + gff + 1j * p.q_ff * gff) * af,
            2 * (gnn * abs(an) ** 2 + gff * abs(af) ** 2 + 2 * (gnf * an * np.conj(af)).real),
        ]

    y0 = np.array([init.a_m, init.a_n, init.a_f, 0], dtype=complex)
    sol = solve_ivp(f, (lo, hi), y0, method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:, -1]


@pytest.mark.parametrize("name", ["fig2", "fig5c", "fig5d", "fig4"])
def test_matches_independent_scipy_solution(name):
    from lics.scenarios import preset

    p = preset(name)
    traj = integrate(p.schedule, p.params, p.init, p.integrator)
    ref = _scipy_reference(p.schedule, p.params, p.init, traj.times[0] if len(traj) > 1 else -8.0,
                           traj.times[-1])
    np.testing.assert_allclose(traj.amplitudes[-1], ref[:3], atol=2e-7)
    assert traj.W[-1] == pytest.approx(ref[3].real, abs=2e-7)


def test_fig2_frozen_reference_values(fig2):
    # frozen from an independent scipy DOP853 solve of the same equations
    final = integrate(fig2.schedule, fig2.params, fig2.init).final_observables()
    assert final["pop_f"] == pytest.approx(0.66755411, abs=1e-6)
    assert final["W"] == pytest.approx(0.33244233, abs=1e-6)


def test_sampling_grid_and_final_state(fig5):
    traj = integrate(fig5.schedule, fig5.params, fig5.init, sampling=[-1.0, 0.0, 1.0])
    assert list(traj.times) == [-1.0, 0.0, 1.0, 8.0]
    final_only = integrate(fig5.schedule, fig5.params, fig5.init)
    assert len(final_only) == 1
    assert final_only.times[-1] == 8.0
    assert abs(traj.final_observables()["W"] - final_only.final_observables()["W"]) < 1e-8


def test_window_extends_to_cover_pulses():
    s = PulseSchedule(g_nn0=1.0, g_ff0=1.0, delta3=-7.0, d3=2.0, e1=False)
    traj = integrate(s, SystemParams(), AmplitudeState(a_n=1), sampling=3)
    assert traj.times[0] == -15.0 and traj.times[-1] == 8.0


def test_short_window_warns():
    s = PulseSchedule(g_nn0=1.0, e1=False, e3=False)
    with pytest.warns(UserWarning, match="durations"):
        integrate(s, SystemParams(), AmplitudeState(a_n=1), IntegratorConfig(t_start=-1, t_end=1))


def test_stiffness_failure_reports_time():
    cfg = IntegratorConfig(t_start=0.0, t_end=1.0)
    with pytest.raises(StiffnessError) as info:
        integrate(InstantCouplings(g_nn=1e14), SystemParams(), AmplitudeState(a_n=1), cfg)
    assert info.value.t == 0.0
    assert "stiffness failure" in str(info.value)


def test_over_normalized_start_rejected():
    with pytest.raises(ValidationError):
        integrate(PulseSchedule(), SystemParams(), AmplitudeState(a_m=1, a_n=1))


@pytest.mark.parametrize("bad", [dict(rel_tol=0), dict(abs_tol=-1), dict(max_step=math.nan),
                                 dict(t_start=1.0, t_end=0.0)])
def test_integrator_config_validation(bad):
    with pytest.raises(ValidationError):
        IntegratorConfig(**bad)


# ---------------------------------------------------------------- invariants

def random_state(draw_vals):
    v = np.asarray(draw_vals)
    amps = v[0:3] + 1j * v[3:6]
    norm = np.linalg.norm(amps)
    if norm < 1e-3:
        amps = np.array([1, 0, 0], dtype=complex)
    else:
        amps = amps / norm
    return AmplitudeState(*amps)


schedules = st.builds(
    PulseSchedule,
    g_mn0=st.floats(0, 10),
    g_nn0=st.floats(0, 10),
    g_ff0=st.floats(0, 10),
    delta2=st.floats(-4, 4),
    delta3=st.floats(-4, 4),
    d2=st.floats(0.5, 2),
    d3=st.floats(0.5, 2),
)
fano = st.builds(SystemParams, q_nn=st.floats(-10, 10), q_ff=st.floats(-10, 10), q_nf=st.floats(-10, 10),
                 delta_mn=st.floats(-5, 5))
vectors = st.lists(st.floats(-1, 1), min_size=6, max_size=6)


@given(schedules, fano, vectors)
def test_conservation_lossless(schedule, params, vec):
    traj = integrate(schedule, params, random_state(vec), sampling=161)
    assert np.max(np.abs(traj.sum_total - 1.0)) < 1e-6


@given(schedules, fano, st.floats(0.01, 0.5), st.floats(0, 0.5), st.floats(0, 0.5), vectors)
def test_total_non_increasing_with_decay(schedule, params, em, en, ef, vec):
    params = params.replace(eta_m=em, eta_n=en, eta_f=ef)
    traj = integrate(schedule, params, random_state(vec), sampling=161)
    assert np.all(np.diff(traj.sum_total) <= 1e-9)


@given(schedules, fano, vectors, st.floats(0, 2 * math.pi))
def test_phase_covariance(schedule, params, vec, phi):
    init = random_state(vec)
    phase = complex(math.cos(phi), math.sin(phi))
    a = integrate(schedule, params, init, sampling=17)
    b = integrate(schedule, params, init.scaled(phase), sampling=17)
    np.testing.assert_allclose(b.amplitudes, a.amplitudes * phase, atol=1e-10)
    np.testing.assert_allclose(b.populations, a.populations, atol=1e-10)
    np.testing.assert_allclose(b.W, a.W, atol=1e-10)


@given(schedules, fano, st.floats(-2, 2), st.floats(-2, 2))
def test_linearity(schedule, params, c1, c2):
    times = np.linspace(-6, 6, 7)
    e_m = integrate(schedule, params, AmplitudeState(a_m=1), sampling=times)
    e_f = integrate(schedule, params, AmplitudeState(a_f=1), sampling=times)
    norm = math.hypot(c1, c2) or 1.0
    a, b = c1 / norm, 1j * c2 / norm
    mix = integrate(schedule, params, AmplitudeState(a_m=a, a_f=b), sampling=times)
    np.testing.assert_allclose(mix.amplitudes, a * e_m.amplitudes + b * e_f.amplitudes, atol=1e-7)


@pytest.mark.parametrize("name", ["fig2", "fig4", "fig5c", "fig5d"])
def test_convergence_under_refinement(name):
    from lics.scenarios import preset

    p = preset(name)
    coarse = integrate(p.schedule, p.params, p.init, IntegratorConfig(rel_tol=1e-6, abs_tol=1e-8))
    fine = integrate(p.schedule, p.params, p.init, IntegratorConfig(rel_tol=5e-7, abs_tol=1e-8))
    for k, v in coarse.final_observables().items():
        assert abs(fine.final_observables()[k] - v) < 1e-6


def test_conservation_slack_scales_with_tolerance():
    assert IntegratorConfig().conservation_slack == 1e-6
    assert IntegratorConfig(rel_tol=1e-6).conservation_slack == pytest.approx(1e-4)


# ---------------------------------------------------------------- scaling

def test_scale_relaxation_rates():
    params, _ = scale_to_dimensionless(DimensionalParams(tau=1e-9, gamma_m=2e7, gamma_n=1.2e8, gamma_f=1.2e8))
    assert params.eta_m == pytest.approx(0.02)
    assert params.eta_n == pytest.approx(0.12)
    assert params.eta_f == pytest.approx(0.12)


def test_scale_zero_map():
    params, peaks = scale_to_dimensionless(DimensionalParams(tau=1.0))
    assert params == SystemParams()
    assert set(peaks.values()) == {0.0}


def test_scale_rabi_peak():
    params, peaks = scale_to_dimensionless(DimensionalParams(tau=1e-9, G_mn=2e9, Omega_nf=3e9))
    assert peaks["g_mn0"] == pytest.approx(2.0)
    assert params.delta_nf == pytest.approx(3.0)


@pytest.mark.parametrize("tau", [0.0, -1e-9])
def test_scale_rejects_bad_tau(tau):
    with pytest.raises(ValidationError):
        scale_to_dimensionless(DimensionalParams(tau=tau))

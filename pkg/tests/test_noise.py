import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxtune import noise, perturb
from fluxtune.errors import DegeneracyError, FluxtuneError, ParameterError
from fluxtune.hilbert import atom_levels, build_basis
from fluxtune.noise import NoiseEnv
from fluxtune.params import CONSTANT_SETS, FluxPoint
from fluxtune.schedule import solve_fprime

TARGET = 2.00005254655
BASIS = build_basis(15, 20)


def _point(scales, f_over_pi, variant="simplified"):
    f = f_over_pi * math.pi
    return FluxPoint(f, solve_fprime(scales, f, TARGET, "perturbative", variant))


def test_noise_env_validation():
    NoiseEnv(m1=0, m2=0, m3=0, a_phi=0, a_ic_rel=0, a_c=0)
    for kw in ({"m1": -1.0}, {"a_c": math.nan}, {"zr": 0.0}, {"a_phi": math.inf}):
        with pytest.raises(ParameterError):
            NoiseEnv(**kw)


def test_flux_noise_psd_hand_value():
    c = CONSTANT_SETS["si2019"]
    m = 40 * c.h / (2 * c.e)
    omega = 2 * math.pi * 2e9
    assert noise.flux_noise_psd(40, omega, 50, c) == pytest.approx(2 * m * m * c.hbar * omega / 50, rel=1e-14)
    assert noise.flux_noise_psd(40, 0.0, 50) == 0.0
    assert noise.flux_noise_psd(40, -omega, 50) == 0.0


def test_tphi_ic_hand_value(scales, env):
    # hbar/(2 a h (dE - Ec)) = 1/(4 pi a (dE - Ec) 1e9)
    expect = 1.0 / (4 * math.pi * 1e-6 * (TARGET - 2.0) * 1e9)
    assert noise.tphi_ic(scales, TARGET, env) == pytest.approx(expect, rel=1e-12)
    assert noise.tphi_ic(scales, TARGET, NoiseEnv(a_ic_rel=0.0)) == math.inf
    with pytest.raises(ParameterError):
        noise.tphi_ic(scales, 2.0, env)


@pytest.mark.parametrize("f_over_pi", [0.995, 0.998487, 0.999, 0.9995])
def test_t1_closed_matches_golden_rule(scales, env, f_over_pi):
    flux = _point(scales, f_over_pi)
    closed = noise.t1_flux_rates(scales, flux, env, "closed", "simplified")
    numeric = noise.t1_flux_rates(scales, flux, env, "numeric", basis=BASIS)
    for k in ("f1", "f2", "f3"):
        assert closed[k] == pytest.approx(numeric[k], rel=0.08, abs=1e-3 * sum(numeric.values()))


def test_t1_scales_with_inductance_squared(scales, env):
    flux = _point(scales, 0.999)
    r1 = noise.t1_flux_rates(scales, flux, env)
    r2 = noise.t1_flux_rates(scales, flux, NoiseEnv(m1=80, m2=80, m3=70))
    for k in r1:
        assert r2[k] == pytest.approx(4 * r1[k], rel=1e-13)
    assert noise.t1_flux(scales, flux, NoiseEnv(m1=0, m2=0, m3=0)) == math.inf


def test_charge_relaxation_forbidden(scales):
    lv = atom_levels(scales, _point(scales, 0.999), BASIS)
    assert noise.charge_relaxation_check(lv) < 1e-10


@pytest.mark.parametrize("f_over_pi", [0.99, 0.995, 0.999])
def test_flux_dephasing_closed_vs_numeric(scales, env, f_over_pi):
    flux = _point(scales, f_over_pi)
    closed = noise.tphi_flux(scales, flux, env, "closed")
    num = noise.flux_dephasing(scales, flux, env, "numeric", BASIS)
    assert num.converged
    assert num.seconds == pytest.approx(closed, rel=0.1)


def test_flux_derivatives_against_closed_form(scales):
    """Numeric d(delta_E)/df matches the derivative of the closed-form splitting."""
    flux = _point(scales, 0.995, "full")
    num = noise.flux_dephasing(scales, flux, NoiseEnv(), "numeric", BASIS).derivatives
    h = 1e-6

    def dpert(df, dfp):
        up = perturb.splitting(scales, FluxPoint(flux.f + df, flux.f_prime + dfp))
        dn = perturb.splitting(scales, FluxPoint(flux.f - df, flux.f_prime - dfp))
        return (up - dn) / (2 * h)

    d_f, d_fp = dpert(h, 0), dpert(0, h)
    assert num["f3"] == pytest.approx(d_fp, rel=1e-3)
    # the f slope is a small difference of two O(Delta) terms, so higher orders show
    assert num["f1"] + num["f2"] == pytest.approx(d_f, rel=0.2)
    assert abs(d_f) < 0.05 * abs(d_fp)


def test_flux_dephasing_off(scales):
    flux = _point(scales, 0.999)
    off = NoiseEnv(a_phi=0.0)
    assert noise.tphi_flux(scales, flux, off) == math.inf
    assert noise.tphi_flux(scales, flux, off, "numeric", BASIS) == math.inf
    with pytest.raises(ParameterError):
        noise.flux_dephasing(scales, flux, off, "numeric", BASIS, step=0.0)
    with pytest.raises(ParameterError):
        noise.tphi_flux(scales, flux, off, "fit")


@pytest.mark.parametrize("f_over_pi", [0.96, 0.98])
def test_charge_closed_vs_numeric_guard_off(scales, env, f_over_pi):
    flux = _point(scales, f_over_pi)
    c = noise.charge_dephasing(scales, flux, env, "closed", "simplified")
    n = noise.charge_dephasing(scales, flux, env, "numeric", basis=BASIS)
    assert not c.degenerate and not n.degenerate and n.converged
    assert n.seconds == pytest.approx(c.seconds, rel=0.1)


def test_charge_guard_engages_near_crossing(scales, env):
    flux = _point(scales, 0.9995)
    c = noise.charge_dephasing(scales, flux, env, "closed", "simplified")
    n = noise.charge_dephasing(scales, flux, env, "numeric", basis=BASIS)
    assert c.degenerate and n.degenerate
    assert n.seconds == pytest.approx(c.seconds, rel=0.1)
    unguarded = noise.charge_dephasing(scales, flux, env, "closed", "simplified", guard=False)
    assert unguarded.seconds < c.seconds


def test_charge_exact_degeneracy_raises(scales, env, monkeypatch):
    flux = _point(scales, 0.999)
    lv = perturb.energies(scales, flux, "simplified")
    pinned = perturb.PerturbativeLevels(lv.e_g, lv.e_e, lv.e_e)
    monkeypatch.setattr(noise.perturb, "energies", lambda *a, **k: pinned)
    with pytest.raises(DegeneracyError):
        noise.charge_dephasing(scales, flux, env, "closed", guard=False)
    assert noise.charge_dephasing(scales, flux, env, "closed").degenerate


def test_three_level_shift_matches_second_order():
    """Far from degeneracy the exact 3x3 response is the second-order shift."""
    e = (0.0, 2.0, 5.0)
    dn, ec = 1e-4, 2.0
    shift = noise._three_level_shift(e, 0.3j, 0.9, 0.0, ec, dn)
    k = 2 * ec * dn
    second = k * k * (0.9**2 / (e[1] - e[2]) - 0.3**2 / (e[0] - e[2]))
    assert shift == pytest.approx(second, rel=1e-6)


def test_budget_records_failures(scales, env):
    flat = FluxPoint(math.pi, 1.3 * math.pi)
    b = noise.budget(scales, flat, env)
    assert math.isnan(b.tphi_ic_s) and "tphi_ic_s" in b.errors
    b = noise.budget(scales, _point(scales, 0.999), env, "closed", "simplified")
    assert not b.errors
    assert set(b.details["t1_rates"]) == {"f1", "f2", "f3"}
    assert b.tphi_ic_s == pytest.approx(1.5144, rel=1e-3)


def test_charge_target_report_structure():
    mk = lambda t, gap, deg: noise.ChargeDephasing(t, "closed", deg, gap, 1.0)
    fs = [0.999 * math.pi, 0.9995 * math.pi, 0.9996 * math.pi]
    closed = [mk(1e-3, 0.1, False), mk(1.001e-3, 1e-6, True), mk(2e-3, -0.1, False)]
    rep = noise.charge_target_report(fs, closed, closed, target_f_over_pi=0.999)
    assert rep["target_met"]
    assert rep["closed"]["f_over_pi"] == pytest.approx(0.999)
    assert rep["crossing_f_over_pi"] == [pytest.approx(0.99955)]
    rep = noise.charge_target_report(fs, closed, closed, target_s=1e-6)
    assert not rep["target_met"]


@settings(max_examples=30, deadline=None)
@given(a=st.floats(1e-6, 1e-2))
def test_charge_time_quadratic_in_amplitude(scales, a):
    curv = 0.5
    t1 = noise._charge_time(scales, NoiseEnv(a_c=a), curv)
    t2 = noise._charge_time(scales, NoiseEnv(a_c=2 * a), curv)
    assert t1 / t2 == pytest.approx(4.0, rel=1e-12)


def test_refine_t1_peak_simplified(scales, env):
    f, fp, t1 = noise.refine_t1_peak(
        scales, env, TARGET, 0.997 * math.pi, 0.9995 * math.pi, "perturbative", "simplified"
    )
    assert f / math.pi == pytest.approx(0.998487, abs=2e-4)
    assert t1 == pytest.approx(1.06893, rel=5e-3)
    assert perturb.splitting(scales, FluxPoint(f, fp), "simplified") == pytest.approx(TARGET, abs=1e-10)


def test_point_diagnostics_keys(scales, env):
    d = noise.charge_point_diagnostics(scales, _point(scales, 0.99951), env, "simplified", BASIS)
    for k in ("closed_s", "numeric_s", "guard_closed", "guard_numeric",
              "e2_minus_ee_closed_ghz", "e2_minus_ee_numeric_ghz", "closed_unguarded_s"):
        assert k in d


def test_parity_broken_control_has_charge_relaxation(scales):
    """Negative control: an offset charge breaks parity and opens <e|n_-|g>."""
    import numpy as np

    from fluxtune.hilbert import AtomLevels, Level, assemble_atom_hamiltonian, eigensolve

    flux = _point(scales, 0.999)
    sp = eigensolve(assemble_atom_hamiltonian(scales, flux, BASIS, n_g=0.05), 3)
    lv = AtomLevels(*(Level(float(sp.energies[i]), sp.vectors[:, i], 0.0) for i in range(3)), BASIS)
    assert noise.charge_relaxation_check(lv, strict=False) > 1e-6
    with pytest.raises(FluxtuneError):
        noise.charge_relaxation_check(lv)
    assert np.isfinite(noise.charge_relaxation_check(atom_levels(scales, flux, BASIS)))


def test_t1_closed_line_exchange_symmetry(scales, env):
    flux = _point(scales, 0.998)
    swapped = FluxPoint(flux.f, 2 * math.pi - flux.f_prime)
    a = noise.t1_flux(scales, flux, NoiseEnv(m1=30, m2=50, m3=35))
    b = noise.t1_flux(scales, swapped, NoiseEnv(m1=50, m2=30, m3=35))
    assert a == pytest.approx(b, rel=1e-12)


def test_doubling_laws(scales, env):
    flux = _point(scales, 0.99)
    assert noise.t1_flux(scales, flux, NoiseEnv(zr=100)) == pytest.approx(2 * noise.t1_flux(scales, flux, env), rel=1e-12)
    only3 = NoiseEnv(m1=0, m2=0, m3=35)
    assert noise.t1_flux(scales, flux, NoiseEnv(m1=0, m2=0, m3=70)) == pytest.approx(
        noise.t1_flux(scales, flux, only3) / 4, rel=1e-12)
    assert noise.tphi_flux(scales, flux, NoiseEnv(a_phi=2e-6)) == pytest.approx(
        noise.tphi_flux(scales, flux, env) / 2, rel=1e-12)
    assert noise.tphi_ic(scales, 2.0001, env) == pytest.approx(2 * noise.tphi_ic(scales, 2.0002, env), rel=1e-9)
    far = _point(scales, 0.97)
    assert noise.tphi_charge(scales, far, NoiseEnv(a_c=2e-4)) == pytest.approx(
        noise.tphi_charge(scales, far, env) / 4, rel=1e-12)
    assert noise.tphi_charge(scales, far, NoiseEnv(a_c=0.0)) == math.inf


def test_budget_positive_and_deterministic(scales, env):
    for fo in (0.96, 0.98, 0.998487, 0.9995):
        flux = _point(scales, fo)
        b = noise.budget(scales, flux, env, "closed", "simplified")
        vals = (b.t1_flux_s, b.tphi_flux_s, b.tphi_ic_s, b.tphi_charge_s)
        assert all(math.isfinite(v) and v > 0 for v in vals)
        assert noise.budget(scales, flux, env, "closed", "simplified").t1_flux_s == b.t1_flux_s
    b = noise.budget(scales, _point(scales, 0.998487), env, "numeric", basis=BASIS)
    assert not b.errors and b.t1_flux_s == pytest.approx(1.0687, rel=1e-3)

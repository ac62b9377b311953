"""Decoherence budget: flux relaxation, and flux, critical-current and charge dephasing.

Each estimator has a closed form and, where meaningful, a numeric path
built on exact diagonalization. SI conversions use the constants carried by
:class:`~fluxtune.params.DerivedScales`. Noise spectra are taken in the
zero-temperature limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from . import hilbert, perturb
from .errors import DegeneracyError, FluxtuneError, ParameterError
from .params import CONSTANT_SETS, DEFAULT_CONSTANTS, DerivedScales, DeviceParams, FluxPoint, PhysicalConstants

__all__ = [
    "NoiseEnv",
    "NoiseBudget",
    "FluxDephasing",
    "ChargeDephasing",
    "METHODS",
    "flux_noise_psd",
    "t1_flux",
    "t1_flux_rates",
    "charge_relaxation_check",
    "tphi_flux",
    "flux_dephasing",
    "tphi_ic",
    "tphi_charge",
    "charge_dephasing",
    "budget",
    "refine_t1_peak",
    "charge_target_report",
    "charge_point_diagnostics",
]

METHODS = ("closed", "numeric")
FLUX_STEP = 1e-6
CHARGE_STEP = 1e-4
GUARD_FACTOR = 100.0


@dataclass(frozen=True)
class NoiseEnv:
    """Noise sources seen by the atom.

    m1, m2, m3 are mutual inductances (Phi0/A) of the two SQUID-loop lines
    and the outer-loop line, zr the line impedance (ohm), a_phi the flux 1/f
    amplitude (Phi0), a_ic_rel the relative critical-current 1/f amplitude
    and a_c the charge 1/f amplitude (e). Zero amplitudes switch a channel off.
    """

    m1: float = 40.0
    m2: float = 40.0
    m3: float = 35.0
    zr: float = 50.0
    a_phi: float = 1e-6
    a_ic_rel: float = 1e-6
    a_c: float = 1e-4

    def __post_init__(self):
        for name in ("m1", "m2", "m3", "a_phi", "a_ic_rel", "a_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(name, f"must be finite and >= 0, got {v!r}")
        if not (math.isfinite(self.zr) and self.zr > 0):
            raise ParameterError("zr", f"must be positive, got {self.zr!r}")

    @classmethod
    def from_device(cls, p: DeviceParams) -> "NoiseEnv":
        m1, m2, m3 = p.m1_m2_m3_phi0_per_A
        return cls(m1, m2, m3, p.zr_ohm, p.aphi_phi0, p.aic_rel, p.ac_e)


def _joule(scales: DerivedScales, ghz: float) -> float:
    return ghz * 1e9 * scales.constants.h


def flux_noise_psd(
    m_phi0_per_A: float,
    omega: float,
    zr: float,
    constants: PhysicalConstants | None = None,
) -> float:
    """S_Phi(omega) = 2 M^2 Theta(omega) hbar omega / Z_R in Wb^2/Hz.

    ``omega`` is an angular frequency in rad/s; M is converted from Phi0/A.
    """
    c = constants or CONSTANT_SETS[DEFAULT_CONSTANTS]
    if omega <= 0:
        return 0.0
    m = m_phi0_per_A * c.flux_quantum
    return 2.0 * m * m * c.hbar * omega / zr


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ParameterError("method", f"expected one of {METHODS}, got {method!r}")


def t1_flux_rates(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    levels: hilbert.AtomLevels | None = None,
) -> dict[str, float]:
    """Golden-rule relaxation rates (1/s) of the three flux lines.

    ``closed`` uses the leading-order matrix elements, proportional to
    cos((Delta + f')/2), cos((Delta - f')/2) and Delta sin(f'/2).
    ``numeric`` evaluates |<e|dH/dPhi_i|g>|^2 S_Phi_i(omega)/hbar^2 with exact
    eigenstates, at omega = delta_E/hbar.
    """
    _check_method(method)
    c = scales.constants
    ms = {"f1": env.m1, "f2": env.m2, "f3": env.m3}
    if method == "closed":
        de = _joule(scales, perturb.splitting(scales, flux, variant))
        ej = _joule(scales, scales.ej)
        d, fp = flux.delta, flux.f_prime
        pref = ej * ej * de * math.exp(-scales.lam2) / (c.hbar**2 * c.phi0**2 * env.zr)
        trig = {
            "f1": math.cos((d + fp) / 2.0) ** 2,
            "f2": math.cos((d - fp) / 2.0) ** 2,
            "f3": d * d * math.sin(fp / 2.0) ** 2,
        }
        return {k: pref * (ms[k] * c.flux_quantum) ** 2 * trig[k] for k in ms}
    basis = basis or hilbert.build_basis(hilbert.DEFAULT_N_FOCK, hilbert.DEFAULT_N_CHARGE)
    levels = levels or hilbert.atom_levels(scales, flux, basis)
    omega = 2.0 * math.pi * levels.delta_e * 1e9
    ops = hilbert.flux_derivative_operators(scales, flux, basis)
    g, e = levels.ground.vector, levels.excited_even.vector
    rates = {}
    for k, op in ops.items():
        el = _joule(scales, abs(hilbert.transition_element(op, e, g))) / c.phi0
        rates[k] = el * el * flux_noise_psd(ms[k], omega, env.zr, c) / c.hbar**2
    return rates


def t1_flux(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    levels: hilbert.AtomLevels | None = None,
) -> float:
    """Flux-noise relaxation time T_1 in seconds (inf when every line is off)."""
    total = sum(t1_flux_rates(scales, flux, env, method, variant, basis, levels).values())
    return math.inf if total == 0.0 else 1.0 / total


def charge_relaxation_check(
    levels: hilbert.AtomLevels, tol: float = 1e-10, strict: bool = True
) -> float:
    """|<e|n_-|g>|, which parity forces to zero.

    With ``strict`` a value above ``tol`` raises, since it signals a basis or
    classification bug.
    """
    basis = levels.basis
    if basis is None:
        raise ParameterError("levels.basis", "levels carry no basis")
    n = np.kron(np.eye(basis.n_fock), np.diag(basis.charges.astype(float)))
    val = abs(hilbert.transition_element(n, levels.excited_even.vector, levels.ground.vector))
    if strict and val > tol:
        raise FluxtuneError(f"charge relaxation element {val:.3g} exceeds {tol:.1g}")
    return val


@dataclass(frozen=True)
class FluxDephasing:
    """Flux 1/f dephasing at one point.

    ``derivatives`` holds d(delta_E)/df_i in GHz per radian of reduced loop
    flux f_i = Phi_i/phi0, keyed ``f1``, ``f2``, ``f3``. ``converged`` reports the step-halving check
    of the numeric derivatives (always True for the closed form).
    """

    seconds: float
    method: str
    derivatives: dict[str, float] = field(default_factory=dict)
    converged: bool = True


def _tphi_flux_closed(scales: DerivedScales, flux: FluxPoint, env: NoiseEnv) -> FluxDephasing:
    c = scales.constants
    if env.a_phi == 0.0:
        return FluxDephasing(math.inf, "closed")
    ec, eb = _joule(scales, scales.ec), _joule(scales, scales.eb)
    ej = _joule(scales, scales.ej)
    lam2, d, fp = scales.lam2, flux.delta, flux.f_prime
    x = 11.0 / (3.0 * ec) - lam2 / eb
    y = 11.0 / (3.0 * ec) + lam2 / eb
    bracket = x + y * (math.cos(fp) - 1.5 * d * math.sin(fp)) + abs(
        x + y * (math.cos(fp) + 0.5 * d * math.sin(fp))
    )
    a_phi = env.a_phi * c.flux_quantum
    den = d * a_phi * ej * ej * bracket
    # at Delta = 0 the splitting is flux-insensitive to first order
    t = math.inf if den == 0.0 else 2.0 * c.hbar * c.phi0 * math.exp(lam2) / den
    return FluxDephasing(t, "closed")


def _central(fun, x: float, h: float) -> float:
    return (fun(x + h) - fun(x - h)) / (2.0 * h)


def _richardson_ok(a: float, b: float, floor: float) -> bool:
    return abs(a - b) <= 0.01 * max(abs(a), abs(b)) or abs(a - b) <= floor


def _tphi_flux_numeric(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    basis: hilbert.BasisSpec | None,
    step: float,
) -> FluxDephasing:
    if not step > 1e-12:
        raise ParameterError("step", f"finite-difference step {step!r} underflows")
    f, fp = flux.f, flux.f_prime

    def along_f(x: float) -> float:
        return hilbert.exact_splitting(scales, FluxPoint(x, fp), basis)

    def along_fp(x: float) -> float:
        return hilbert.exact_splitting(scales, FluxPoint(f, x), basis)

    d_f, d_fp = _central(along_f, f, step), _central(along_fp, fp, step)
    d_f2, d_fp2 = _central(along_f, f, step / 2), _central(along_fp, fp, step / 2)
    # rounding floor: eigenvalue noise ~1e-12 GHz over the step
    floor = 1e-11 / step
    converged = _richardson_ok(d_f, d_f2, floor) and _richardson_ok(d_fp, d_fp2, floor)
    ders = {"f1": 0.5 * (d_f - d_fp), "f2": 0.5 * (d_f + d_fp), "f3": d_fp}
    if env.a_phi == 0.0:
        return FluxDephasing(math.inf, "numeric", ders, converged)
    c = scales.constants
    # A_Phi/phi0 is the reduced-flux amplitude: a_phi * Phi0/phi0 = 2 pi a_phi
    a_red = env.a_phi * c.flux_quantum / c.phi0
    rate = a_red * sum(abs(_joule(scales, v)) for v in ders.values()) / c.hbar
    t = math.inf if rate == 0.0 else 1.0 / rate
    return FluxDephasing(t, "numeric", ders, converged)


def flux_dephasing(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    basis: hilbert.BasisSpec | None = None,
    step: float = FLUX_STEP,
) -> FluxDephasing:
    """Flux dephasing with diagnostics; see :func:`tphi_flux`."""
    _check_method(method)
    if method == "closed":
        return _tphi_flux_closed(scales, flux, env)
    return _tphi_flux_numeric(scales, flux, env, basis, step)


def tphi_flux(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    basis: hilbert.BasisSpec | None = None,
    step: float = FLUX_STEP,
) -> float:
    """Flux 1/f dephasing time in seconds.

    The numeric method sums hbar^-1 A_Phi |d delta_E/dPhi_i| over the three
    lines. Shifting one SQUID-loop flux by x moves f by x/2 and f' by -x/2
    (line 1) or +x/2 (line 2), so d/dPhi_1 = (d_f - d_f')/(2 phi0),
    d/dPhi_2 = (d_f + d_f')/(2 phi0) and d/dPhi_3 = d_f'/phi0. Derivatives are
    central differences of the exact splitting.
    """
    return flux_dephasing(scales, flux, env, method, basis, step).seconds


def tphi_ic(scales: DerivedScales, delta_e: float, env: NoiseEnv) -> float:
    """Critical-current 1/f dephasing time hbar/(2 (A_Ic/I_c)(delta_E - E_c)) in seconds."""
    if not delta_e > scales.ec:
        raise ParameterError("delta_e", f"must exceed E_c = {scales.ec!r} GHz, got {delta_e!r}")
    if env.a_ic_rel == 0.0:
        return math.inf
    c = scales.constants
    return c.hbar / (2.0 * env.a_ic_rel * _joule(scales, delta_e - scales.ec))


@dataclass(frozen=True)
class ChargeDephasing:
    """Charge 1/f dephasing at one point.

    ``curvature`` is d^2 delta_E/dn_g^2 in GHz. When ``degenerate`` is set,
    |E_2 - E_e| fell below the guard and ``seconds`` comes from the exact
    three-level response at dn = A_c/e; ``curvature`` is then the equivalent
    2 delta[delta_E]/dn^2.
    """

    seconds: float
    method: str
    degenerate: bool
    e2_minus_ee: float
    curvature: float
    converged: bool = True


def _three_level_shift(
    e: tuple[float, float, float], n2g: complex, n2e: complex, n_ge: complex, ec: float, dn: float
) -> float:
    """Change of E_e - E_g under 2 E_c n dn within the span of |g>, |e>, |psi_->."""
    h = np.diag(np.array(e, dtype=complex))
    k = 2.0 * ec * dn
    h[2, 0], h[2, 1], h[1, 0] = k * n2g, k * n2e, k * n_ge
    h[0, 2], h[1, 2], h[0, 1] = np.conj(h[2, 0]), np.conj(h[2, 1]), np.conj(h[1, 0])
    w, v = np.linalg.eigh(h)
    i_g = int(np.argmax(np.abs(v[0])))
    rest = [i for i in range(3) if i != i_g]
    i_e = max(rest, key=lambda i: abs(v[1, i]))
    return float((w[i_e] - w[i_g]) - (e[1] - e[0]))


def _guard_scale(ec: float, dn: float, n2e: complex) -> float:
    return GUARD_FACTOR * 2.0 * ec * dn * abs(n2e)


def _charge_time(scales: DerivedScales, env: NoiseEnv, curvature_ghz: float) -> float:
    if env.a_c == 0.0 or curvature_ghz == 0.0:
        return math.inf
    c = scales.constants
    return c.hbar / (math.pi**2 * env.a_c**2 * abs(_joule(scales, curvature_ghz)))


def _charge_closed(
    scales: DerivedScales, flux: FluxPoint, env: NoiseEnv, variant: str, guard: bool
) -> ChargeDephasing:
    lv = perturb.energies(scales, flux, variant)
    el = perturb.charge_elements(scales, flux)
    ec = scales.ec
    gap = lv.e_2 - lv.e_e
    degenerate = abs(gap) < _guard_scale(ec, env.a_c, el.minus_e)
    if degenerate and guard:
        dn = env.a_c
        shift = _three_level_shift((lv.e_g, lv.e_e, lv.e_2), el.minus_g, el.minus_e, 0.0, ec, dn)
        curv = 2.0 * shift / dn**2 if dn else 0.0
        return ChargeDephasing(_charge_time(scales, env, curv), "closed", True, gap, curv)
    if gap == 0.0 or lv.e_2 == lv.e_g:
        raise DegeneracyError(f"E_2 - E_e = {gap!r} GHz: second-order charge formula diverges")
    bracket = abs(el.minus_g) ** 2 / (lv.e_2 - lv.e_g) - abs(el.minus_e) ** 2 / gap
    curv = 8.0 * ec * ec * bracket
    return ChargeDephasing(_charge_time(scales, env, curv), "closed", degenerate, gap, curv)


@dataclass(frozen=True)
class _GaugeSolver:
    """Full-space real solver for H with an offset charge (parity broken)."""

    scales: DerivedScales
    flux: FluxPoint
    basis: hilbert.BasisSpec

    def splitting(self, n_g: float) -> float:
        b = self.basis
        ns = b.charges
        gauge = np.diag(np.exp(1j * ns * (self.flux.delta / 2.0 - math.pi / 2.0)))
        h = hilbert._gauge_hamiltonian(self.scales, self.flux, b, "exact", gauge, n_g)
        w, v = sla.eigh(h, subset_by_index=[0, 5])
        # parity in the gauge is the reflection n_- -> -n_-
        vr = v.reshape(b.n_fock, ns.size, -1)
        par = np.einsum("nck,nck->k", vr, vr[:, ::-1, :])
        even = [k for k in range(w.size) if par[k] > 0.5]
        if len(even) < 2 or even[0] != 0:
            raise FluxtuneError(
                f"offset-charge solve lost parity assignment at n_g = {n_g!r}",
            )
        return float(w[even[1]] - w[even[0]])


def _five_point(fun, h: float) -> float:
    return (-fun(2 * h) + 16 * fun(h) - 30 * fun(0.0) + 16 * fun(-h) - fun(-2 * h)) / (12 * h * h)


def _charge_numeric(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    basis: hilbert.BasisSpec | None,
    guard: bool,
    step: float,
    levels: hilbert.AtomLevels | None,
) -> ChargeDephasing:
    basis = basis or hilbert.build_basis(hilbert.DEFAULT_N_FOCK, hilbert.DEFAULT_N_CHARGE)
    levels = levels or hilbert.atom_levels(scales, flux, basis)
    n = np.kron(np.eye(basis.n_fock), np.diag(basis.charges.astype(float)))
    g, e, m = levels.ground.vector, levels.excited_even.vector, levels.excited_odd.vector
    n2g = hilbert.transition_element(n, m, g)
    n2e = hilbert.transition_element(n, m, e)
    n_ge = hilbert.transition_element(n, e, g)
    ec = scales.ec
    gap = levels.e_2 - levels.e_e
    degenerate = abs(gap) < _guard_scale(ec, max(env.a_c, step), n2e)
    if degenerate and guard:
        dn = env.a_c
        shift = _three_level_shift((levels.e_g, levels.e_e, levels.e_2), n2g, n2e, n_ge, ec, dn)
        curv = 2.0 * shift / dn**2 if dn else 0.0
        return ChargeDephasing(_charge_time(scales, env, curv), "numeric", True, gap, curv)
    if gap == 0.0:
        raise DegeneracyError("E_2 = E_e exactly: offset-charge curvature is undefined")
    solver = _GaugeSolver(scales, flux, basis)
    cache: dict[float, float] = {}

    def split(x: float) -> float:
        if x not in cache:
            cache[x] = solver.splitting(x)
        return cache[x]

    curv = _five_point(split, step)
    curv_half = _five_point(split, step / 2)
    converged = _richardson_ok(curv, curv_half, 0.0)
    return ChargeDephasing(
        _charge_time(scales, env, curv), "numeric", degenerate, gap, curv, converged
    )


def charge_dephasing(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    guard: bool = True,
    step: float = CHARGE_STEP,
    levels: hilbert.AtomLevels | None = None,
) -> ChargeDephasing:
    """Second-order charge dephasing with diagnostics; see :func:`tphi_charge`."""
    _check_method(method)
    if method == "closed":
        return _charge_closed(scales, flux, env, variant, guard)
    return _charge_numeric(scales, flux, env, basis, guard, step, levels)


def tphi_charge(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    guard: bool = True,
    step: float = CHARGE_STEP,
) -> float:
    """Charge 1/f dephasing time hbar/(pi^2 (A_c/e)^2 |d^2 delta_E/dn^2|) in seconds.

    ``closed`` uses second-order energies and matrix elements. ``numeric``
    adds an offset charge n_g to the exact Hamiltonian and differentiates the
    splitting twice (5-point stencil). When |E_2 - E_e| drops below 100 times
    2 E_c (A_c/e)|<psi_-|n_-|e>|, the second-order expression is replaced by
    the exact response of the three coupled levels (``guard=True``) or a
    :class:`DegeneracyError` is raised if the denominator vanishes.
    """
    return charge_dephasing(scales, flux, env, method, variant, basis, guard, step).seconds


@dataclass(frozen=True)
class NoiseBudget:
    """All four characteristic times at one bias point, with per-channel details."""

    t1_flux_s: float
    tphi_flux_s: float
    tphi_ic_s: float
    tphi_charge_s: float
    details: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


def budget(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    method: str = "closed",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
) -> NoiseBudget:
    """Evaluate every estimator; failures are recorded per channel as NaN plus a message."""
    _check_method(method)
    out: dict[str, float] = {}
    details: dict = {}
    errors: dict[str, str] = {}
    levels = None
    if method == "numeric":
        levels = hilbert.atom_levels(scales, flux, basis)
    delta_e = levels.delta_e if levels is not None else perturb.splitting(scales, flux, variant)

    def attempt(name, fn):
        try:
            out[name] = fn()
        except FluxtuneError as exc:
            out[name] = math.nan
            errors[name] = str(exc)

    def t1():
        rates = t1_flux_rates(scales, flux, env, method, variant, basis, levels)
        details["t1_rates"] = rates
        total = sum(rates.values())
        return math.inf if total == 0 else 1.0 / total

    def tf():
        r = flux_dephasing(scales, flux, env, method, basis)
        details["flux_derivatives"] = r.derivatives
        return r.seconds

    def tc():
        r = charge_dephasing(scales, flux, env, method, variant, basis, levels=levels)
        details["charge"] = r
        return r.seconds

    attempt("t1_flux_s", t1)
    attempt("tphi_flux_s", tf)
    attempt("tphi_ic_s", lambda: tphi_ic(scales, delta_e, env))
    attempt("tphi_charge_s", tc)
    return NoiseBudget(details=details, errors=errors, **out)


def refine_t1_peak(
    scales: DerivedScales,
    env: NoiseEnv,
    delta_e_target: float,
    f_lo: float,
    f_hi: float,
    engine: str = "perturbative",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    xatol: float = 1e-9,
) -> tuple[float, float, float]:
    """Maximize the closed-form T_1 along the tuning curve for f in [f_lo, f_hi].

    Returns (f, f', T_1) at the maximum.
    """
    from .schedule import solve_fprime

    def neg_t1(f: float) -> float:
        fp = solve_fprime(scales, f, delta_e_target, engine, variant, basis)
        return -t1_flux(scales, FluxPoint(f, fp), env, "closed", variant)

    res = minimize_scalar(neg_t1, bounds=(f_lo, f_hi), method="bounded", options={"xatol": xatol})
    f = float(res.x)
    fp = solve_fprime(scales, f, delta_e_target, engine, variant, basis)
    return f, fp, -float(res.fun)


def charge_target_report(
    f_values,
    closed: list[ChargeDephasing],
    numeric: list[ChargeDephasing],
    target_s: float = 1.00293e-3,
    target_f_over_pi: float = 0.99951,
    rtol: float = 0.05,
    f_tol_over_pi: float = 2e-4,
) -> dict:
    """Compare the minimum charge dephasing time along a sweep with a reference value.

    Returns a plain dictionary holding both methods' minima, their locations,
    |E_2 - E_e| and the guard state there, plus whether the reference is met.
    """
    fs = np.asarray(list(f_values), dtype=float) / math.pi

    def summary(results: list[ChargeDephasing]) -> dict:
        t = np.array([r.seconds for r in results])
        i = int(np.nanargmin(t))
        r = results[i]
        return {
            "min_s": float(t[i]),
            "f_over_pi": float(fs[i]),
            "e2_minus_ee_ghz": float(r.e2_minus_ee),
            "guard_on": bool(r.degenerate),
            "relative_error": float(t[i] / target_s - 1.0),
        }

    rep = {
        "target_s": target_s,
        "target_f_over_pi": target_f_over_pi,
        "rtol": rtol,
        "closed": summary(closed),
        "numeric": summary(numeric),
    }
    gaps = np.array([r.e2_minus_ee for r in numeric])
    sign_change = np.nonzero(np.diff(np.sign(gaps)))[0]
    rep["crossing_f_over_pi"] = [float(0.5 * (fs[i] + fs[i + 1])) for i in sign_change]
    rep["target_met"] = all(
        abs(rep[m]["relative_error"]) <= rtol
        and abs(rep[m]["f_over_pi"] - target_f_over_pi) <= f_tol_over_pi
        for m in ("closed", "numeric")
    )
    return rep


def charge_point_diagnostics(
    scales: DerivedScales,
    flux: FluxPoint,
    env: NoiseEnv,
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
) -> dict:
    """Charge dephasing at one point by every route, for discrepancy reports.

    Includes the unguarded second-order value, which may be huge or
    undefined right at the E_2 = E_e crossing.
    """
    closed = charge_dephasing(scales, flux, env, "closed", variant)
    numeric = charge_dephasing(scales, flux, env, "numeric", variant, basis)
    out = {
        "f_over_pi": flux.f / math.pi,
        "f_prime_over_pi": flux.f_prime / math.pi,
        "closed_s": closed.seconds,
        "numeric_s": numeric.seconds,
        "guard_closed": closed.degenerate,
        "guard_numeric": numeric.degenerate,
        "e2_minus_ee_closed_ghz": closed.e2_minus_ee,
        "e2_minus_ee_numeric_ghz": numeric.e2_minus_ee,
    }
    try:
        out["closed_unguarded_s"] = charge_dephasing(
            scales, flux, env, "closed", variant, guard=False
        ).seconds
    except DegeneracyError as exc:
        out["closed_unguarded_s"] = None
        out["closed_unguarded_error"] = str(exc)
    return out

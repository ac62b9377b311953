"""Constant-splitting tuning curve f'(f) and coupling-regime bookkeeping."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from . import hilbert, perturb
from .errors import FluxtuneError, ParameterError, UnreachableTargetError
from .params import DerivedScales, FluxPoint

__all__ = [
    "FluxPoint",
    "Regime",
    "ScheduleRow",
    "Schedule",
    "ENGINES",
    "min_fprime",
    "solve_fprime",
    "build_schedule",
    "regime",
    "identity_residual",
    "f_grid",
]

ENGINES = ("perturbative", "exact")
_EPS = 1e-9
_TOL = 1e-10


class Regime(str, enum.Enum):
    NEGLIGIBLE = "negligible"
    WEAK_TO_STRONG = "weak_to_strong"
    ULTRASTRONG = "ultrastrong"


def regime(g_over_wc: float, negligible: float = 1e-4, ultrastrong: float = 0.1) -> Regime:
    """Classify a coupling ratio: below ``negligible``, at or above ``ultrastrong``, or between."""
    if not g_over_wc >= 0:
        raise ParameterError("g_over_wc", f"must be >= 0, got {g_over_wc!r}")
    if g_over_wc < negligible:
        return Regime.NEGLIGIBLE
    if g_over_wc >= ultrastrong:
        return Regime.ULTRASTRONG
    return Regime.WEAK_TO_STRONG


def min_fprime(scales: DerivedScales) -> float:
    """Lower end of the tuning branch, 2pi - arccos((3 lambda^4 - 11)/(11 + 3 lambda^4))."""
    l4 = scales.lam2**2
    return 2.0 * math.pi - math.acos((3.0 * l4 - 11.0) / (11.0 + 3.0 * l4))


def _check_solvable(scales: DerivedScales, f: float, target: float) -> None:
    if not f < math.pi:
        raise UnreachableTargetError(
            f"f = {f / math.pi:.10g} pi: at or beyond pi the splitting is pinned to E_c",
            f=f,
            target=target,
        )
    if not target > scales.ec:
        raise UnreachableTargetError(
            f"target {target!r} GHz must exceed E_c = {scales.ec!r} GHz", f=f, target=target
        )


def _bisect(fun, lo: float, hi: float, flo: float, iterations: int = 100) -> float:
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    return 0.5 * (lo + hi)


def _perturbative_root(scales: DerivedScales, f: float, target: float, variant: str) -> float:
    def resid(fp: float) -> float:
        return perturb.splitting(scales, FluxPoint(f, fp), variant) - target

    grid = np.linspace(min_fprime(scales) + _EPS, 2.0 * math.pi - _EPS, 65)
    vals = [resid(x) for x in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            return float(a)
        if (fa < 0.0) != (fb < 0.0):
            return _bisect(resid, float(a), float(b), fa)
    raise UnreachableTargetError(
        f"no sign change of the splitting on the tuning branch at f = {f / math.pi:.10g} pi",
        f=f,
        target=target,
    )


def _exact_root(
    scales: DerivedScales,
    f: float,
    target: float,
    basis: hilbert.BasisSpec | None,
    form: str,
    seed: float | None,
) -> float:
    def resid(fp: float) -> float:
        return hilbert.exact_splitting(scales, FluxPoint(f, fp), basis, form) - target

    lo_lim, hi_lim = math.pi + _EPS, 2.0 * math.pi - _EPS
    x0 = min(max(seed if seed is not None else 1.5 * math.pi, lo_lim), hi_lim)
    r0 = resid(x0)
    if r0 == 0.0:
        return x0
    # grow a bracket outward from the seed, towards the side the residual points to
    step = 1e-3
    lo, hi = x0, x0
    rlo = rhi = r0
    for _ in range(60):
        if r0 > 0.0:
            lo = max(x0 - step, lo_lim)
            rlo = resid(lo)
            if rlo <= 0.0:
                break
            hit_wall = lo == lo_lim
        else:
            hi = min(x0 + step, hi_lim)
            rhi = resid(hi)
            if rhi >= 0.0:
                break
            hit_wall = hi == hi_lim
        if hit_wall:
            raise UnreachableTargetError(
                f"exact splitting does not reach {target!r} GHz at f = {f / math.pi:.10g} pi",
                f=f,
                target=target,
            )
        step *= 2.0
    if r0 > 0.0:
        hi = x0
    else:
        lo = x0
    return brentq(resid, lo, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)


def solve_fprime(
    scales: DerivedScales,
    f: float,
    delta_e_target: float,
    engine: str = "perturbative",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    form: str = "exact",
) -> float:
    """f' on the branch (pi, 2pi) where the splitting equals ``delta_e_target`` (GHz).

    The perturbative engine scans (min_fprime, 2pi) in 64 steps and bisects
    the closed form. The exact engine brackets the exact splitting around
    the perturbative root and refines it with Brent's method; its root may
    lie slightly below ``min_fprime`` at large Delta.

    Raises
    ------
    UnreachableTargetError
        If the target is not attained, e.g. at f = pi.
    """
    if engine not in ENGINES:
        raise ParameterError("engine", f"expected one of {ENGINES}, got {engine!r}")
    _check_solvable(scales, f, delta_e_target)
    if engine == "perturbative":
        fp = _perturbative_root(scales, f, delta_e_target, variant)
        value = perturb.splitting(scales, FluxPoint(f, fp), variant)
    else:
        try:
            seed = _perturbative_root(scales, f, delta_e_target, "full")
        except UnreachableTargetError:
            seed = None
        fp = _exact_root(scales, f, delta_e_target, basis, form, seed)
        value = hilbert.exact_splitting(scales, FluxPoint(f, fp), basis, form)
    if not abs(value - delta_e_target) <= _TOL:
        raise FluxtuneError(
            f"root at f = {f / math.pi:.10g} pi misses the target by {value - delta_e_target:.3g} GHz"
        )
    return float(fp)


@dataclass(frozen=True)
class ScheduleRow:
    """One point of the tuning curve.

    ``g``, ``g0``, ``gz`` and ``gx`` come from exact diagonalization; the
    ``*_pert`` fields come from the closed forms of the chosen variant.
    """

    f: float
    f_prime: float
    delta: float
    delta_e_exact: float
    delta_e_pert: float
    g: float
    g0: float
    gz: float
    gx: float
    g_pert: float
    g0_pert: float
    gz_pert: float
    g_over_wc: float
    regime: str

    @property
    def flux(self) -> FluxPoint:
        return FluxPoint(self.f, self.f_prime)


@dataclass(frozen=True)
class Schedule:
    rows: tuple[ScheduleRow, ...]
    engine: str
    variant: str
    target: float

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def as_dicts(self) -> list[dict]:
        return [asdict(r) for r in self.rows]


def f_grid(start: float, stop: float, points: int) -> np.ndarray:
    """``points`` evenly spaced values of f (radians) between ``start`` pi and ``stop`` pi."""
    if points < 2:
        raise ParameterError("f_grid.points", "need at least 2 points")
    if not 0.0 < start < stop < 1.0:
        raise ParameterError("f_grid", f"need 0 < start < stop < 1 (units of pi), got {start}, {stop}")
    return np.linspace(start, stop, points) * math.pi


def _row(
    scales: DerivedScales,
    f: float,
    target: float,
    engine: str,
    variant: str,
    basis: hilbert.BasisSpec,
    form: str,
    thresholds: tuple[float, float],
) -> ScheduleRow:
    try:
        fp = solve_fprime(scales, f, target, engine, variant, basis, form)
    except FluxtuneError as exc:
        raise type(exc)(f"schedule row f = {f / math.pi:.10g} pi: {exc}") from exc
    flux = FluxPoint(f, fp)
    levels = hilbert.atom_levels(scales, flux, basis, form)
    ex = hilbert.exact_couplings(levels, hilbert.build_operators(basis, scales).phi_plus, scales)
    pc = perturb.couplings(scales, flux, variant)
    return ScheduleRow(
        f=float(f),
        f_prime=fp,
        delta=flux.delta,
        delta_e_exact=levels.delta_e,
        delta_e_pert=perturb.splitting(scales, flux, variant),
        g=ex.g,
        g0=ex.g0,
        gz=ex.gz,
        gx=ex.gx,
        g_pert=pc.g,
        g0_pert=pc.g0,
        gz_pert=pc.gz,
        g_over_wc=ex.g_over_wc,
        regime=regime(abs(ex.g_over_wc), *thresholds).value,
    )


def build_schedule(
    scales: DerivedScales,
    f_values,
    delta_e_target: float,
    engine: str = "exact",
    variant: str = "full",
    basis: hilbert.BasisSpec | None = None,
    form: str = "exact",
    workers: int = 1,
    regime_thresholds: tuple[float, float] = (1e-4, 0.1),
) -> Schedule:
    """Solve f'(f) on each grid point and tabulate splittings and couplings.

    Rows keep the order of ``f_values`` whatever ``workers`` is.
    ``regime_thresholds`` are the (negligible, ultrastrong) bounds on g/omega_c.
    """
    basis = basis or hilbert.build_basis(hilbert.DEFAULT_N_FOCK, hilbert.DEFAULT_N_CHARGE)
    fs = [float(f) for f in f_values]

    def job(f: float) -> ScheduleRow:
        return _row(scales, f, delta_e_target, engine, variant, basis, form, regime_thresholds)

    if workers > 1 and len(fs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, fs))
    else:
        rows = [job(f) for f in fs]
    return Schedule(tuple(rows), engine, variant, float(delta_e_target))


def identity_residual(scales: DerivedScales, flux: FluxPoint, g: float, delta_e: float) -> float:
    """Relative spread of the three members of the tuning identity.

    left   = g^2 E_b^2 / (8 w0 wc lambda^4 E_J^2)
    middle = Delta^2 exp(-lambda^2) sin^2(f'/2)
    right  = 11 E_b Delta^2 e^{-lambda^2}/(11 E_b + 3 lambda^2 E_c)
             - 3 E_b E_c (dE - E_c)/((11 E_b + 3 lambda^2 E_c) E_J^2)

    The identity is exact for the simplified closed-form g and splitting.
    """
    eb, ec, ej = scales.eb, scales.ec, scales.ej
    lam2 = scales.lam2
    d2e = flux.delta**2 * math.exp(-lam2)
    left = g * g * eb * eb / (8.0 * scales.omega0_ghz * scales.cavity_ghz * lam2 * lam2 * ej * ej)
    middle = d2e * math.sin(flux.f_prime / 2.0) ** 2
    den = 11.0 * eb + 3.0 * lam2 * ec
    right = 11.0 * eb * d2e / den - 3.0 * eb * ec * (delta_e - ec) / (den * ej * ej)
    vals = (left, middle, right)
    scale = max(abs(v) for v in vals)
    if scale == 0.0:
        return 0.0
    return max(abs(a - b) for a in vals for b in vals) / scale

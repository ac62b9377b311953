"""Closed-form perturbation theory in Delta = pi - f.

Every formula takes energies as E/h in GHz. Two variants are offered:

``"full"``
    keeps the intermediate denominators E_b +- E_c and E_b + 3E_c,
``"simplified"``
    drops E_c against E_b, giving the compact published forms.

Couplings come out as omega/2pi in GHz because omega_0/2pi and omega_c/2pi
enter only through sqrt(omega_0 omega_c), so no explicit 2pi factor is
needed anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .params import DerivedScales, FluxPoint

__all__ = [
    "VARIANTS",
    "CouplingSet",
    "PerturbativeLevels",
    "PhiElements",
    "ChargeElements",
    "zero_order_energy",
    "energies",
    "splitting",
    "phi_elements",
    "couplings",
    "g_over_wc",
    "charge_elements",
]

VARIANTS = ("full", "simplified")


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ParameterError("variant", f"expected one of {VARIANTS}, got {variant!r}")


@dataclass(frozen=True)
class CouplingSet:
    """Rabi-model coefficients g, g_0, g_z, g_x as omega/2pi in GHz."""

    g: float
    g0: float
    gz: float
    gx: float
    cavity_ghz: float

    @property
    def g_over_wc(self) -> float:
        return self.g / self.cavity_ghz

    @property
    def g0_over_g(self) -> float:
        return self.g0 / self.g if self.g else math.nan

    @property
    def gz_over_g(self) -> float:
        return self.gz / self.g if self.g else math.nan


@dataclass(frozen=True)
class PerturbativeLevels:
    e_g: float
    e_e: float
    e_2: float

    @property
    def delta_e(self) -> float:
        return self.e_e - self.e_g


@dataclass(frozen=True)
class PhiElements:
    """<e|phi_+|g> (imaginary), <g|phi_+|g> and <e|phi_+|e> (real)."""

    eg: complex
    gg: float
    ee: float


@dataclass(frozen=True)
class ChargeElements:
    """<psi_-|n_-|g> and <psi_-|n_-|e>."""

    minus_g: complex
    minus_e: complex


def zero_order_energy(n: int, n_minus: int, scales: DerivedScales) -> float:
    """(n + 1/2) E_b + E_c n_-^2 + 4 E_J."""
    if n < 0:
        raise ParameterError("n", "Fock number must be >= 0")
    return (n + 0.5) * scales.eb + scales.ec * n_minus * n_minus + 4.0 * scales.ej


def _common(scales: DerivedScales, flux: FluxPoint):
    d = flux.delta
    lam2 = scales.lam2
    k = d * d * scales.ej**2 * math.exp(-lam2)
    return d, lam2, k, math.cos(flux.f_prime / 2.0) ** 2, math.sin(flux.f_prime / 2.0) ** 2


def energies(scales: DerivedScales, flux: FluxPoint, variant: str = "full") -> PerturbativeLevels:
    """Second-order energies of |g>, |e> and |psi_-> (GHz)."""
    _check_variant(variant)
    eb, ec = scales.eb, scales.ec
    _, lam2, k, c2, s2 = _common(scales, flux)
    base = eb / 2.0 + 4.0 * scales.ej
    if variant == "full":
        e_g = base - 2.0 * k * c2 / ec - 2.0 * k * lam2 * s2 / (eb + ec)
        e_e = (
            base
            + ec
            + 5.0 * k * c2 / (3.0 * ec)
            - 2.0 * k * lam2 * s2 / (eb - ec)
            - k * lam2 * s2 / (eb + 3.0 * ec)
        )
    else:
        e_g = base - 2.0 * k * c2 / ec - 2.0 * k * lam2 * s2 / eb
        e_e = base + ec + 5.0 * k * c2 / (3.0 * ec) - 3.0 * k * lam2 * s2 / eb
    e_2 = base + ec - k * (c2 / (3.0 * ec) + lam2 * s2 / (eb + 3.0 * ec))
    return PerturbativeLevels(e_g, e_e, e_2)


def splitting(scales: DerivedScales, flux: FluxPoint, variant: str = "full") -> float:
    """Qubit splitting delta_E = E_e - E_g (GHz)."""
    _check_variant(variant)
    eb, ec = scales.eb, scales.ec
    _, lam2, k, c2, s2 = _common(scales, flux)
    if variant == "full":
        return (
            ec
            + 11.0 * k * c2 / (3.0 * ec)
            - 4.0 * ec * k * lam2 * s2 / (eb * eb - ec * ec)
            - k * lam2 * s2 / (eb + 3.0 * ec)
        )
    return ec + k * (11.0 * c2 / (3.0 * ec) - lam2 * s2 / eb)


def phi_elements(scales: DerivedScales, flux: FluxPoint, variant: str = "full") -> PhiElements:
    """Matrix elements of phi_+ within the qubit subspace."""
    _check_variant(variant)
    eb, ec = scales.eb, scales.ec
    d, lam2, k, _, _ = _common(scales, flux)
    lam = scales.lam
    fp = flux.f_prime
    sin_fp = math.sin(fp)
    half = d * scales.ej * lam2 * math.exp(-lam2 / 2.0) * math.sin(fp / 2.0)
    if variant == "full":
        eg = 2.0 * math.sqrt(2.0) * half * eb / (eb * eb - ec * ec)
        gg = -2.0 * k * lam2 * sin_fp * (2.0 * eb + (2.0 - lam2) * ec) / (eb * ec * (eb + ec))
        ee = 2.0 * k * lam2 * (
            lam * (math.cos(fp) - 1.0) / (eb * (eb - ec))
            + sin_fp
            * (10.0 * eb * eb + (26.0 + 3.0 * lam2) * eb * ec - 3.0 * (4.0 + lam2) * ec * ec)
            / (6.0 * eb * ec * (eb + 3.0 * ec) * (eb - ec))
        )
    else:
        eg = 2.0 * math.sqrt(2.0) * half / eb
        gg = -4.0 * k * lam2 * sin_fp / (eb * ec)
        ee = 10.0 * k * lam2 * sin_fp / (3.0 * eb * ec)
    return PhiElements(eg=1j * eg, gg=gg, ee=ee)


def couplings(scales: DerivedScales, flux: FluxPoint, variant: str = "full") -> CouplingSet:
    """g, g_0, g_z (and g_x = 0) from the perturbative phi_+ elements.

    With the simplified variant g = sqrt(8 w0 wc) Delta lambda^2 (E_J/E_b)
    exp(-lambda^2/2) sin(f'/2) and g_z/g_0 = -11.
    """
    el = phi_elements(scales, flux, variant)
    k = math.sqrt(scales.omega0_ghz * scales.cavity_ghz)
    return CouplingSet(
        g=k * el.eg.imag,
        g0=-k * (el.ee + el.gg) / 2.0,
        gz=-k * (el.ee - el.gg) / 2.0,
        gx=0.0,
        cavity_ghz=scales.cavity_ghz,
    )


def g_over_wc(scales: DerivedScales, flux: FluxPoint) -> float:
    """g/omega_c = sqrt(8 w0/wc) Delta lambda^4 (E_J/E_c) exp(-lambda^2/2) sin(f'/2)."""
    lam2 = scales.lam2
    return (
        math.sqrt(8.0 * scales.omega0_ghz / scales.cavity_ghz)
        * flux.delta
        * lam2
        * lam2
        * (scales.ej / scales.ec)
        * math.exp(-lam2 / 2.0)
        * math.sin(flux.f_prime / 2.0)
    )


def charge_elements(scales: DerivedScales, flux: FluxPoint) -> ChargeElements:
    """<psi_-|n_-|g> and <psi_-|n_-|e> to leading order in Delta."""
    d = flux.delta
    eb, ec, ej = scales.eb, scales.ec, scales.ej
    lam2 = scales.lam2
    c, s = math.cos(flux.f_prime / 2.0), math.sin(flux.f_prime / 2.0)
    minus_g = -1j * math.sqrt(2.0) * d * ej * math.exp(-lam2 / 2.0) * c / ec
    minus_e = 1.0 + 2.0 * d * d * ej * ej * math.exp(-lam2) * (
        c * c / (9.0 * ec * ec) - lam2 * s * s / (eb + 3.0 * ec) ** 2
    )
    return ChargeElements(minus_g=minus_g, minus_e=complex(minus_e))

"""Units, physical constants, device parameters and derived energy scales.

Conventions used throughout the package:

* energies are E/h in GHz,
* angular frequencies are reported as omega/2pi in GHz,
* inductances in nH, capacitances in pF, times in seconds,
* fluxes are reduced fluxes f = Phi/phi0 in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .errors import FluxDomainError, ParameterError

__all__ = [
    "PhysicalConstants",
    "CONSTANT_SETS",
    "DEFAULT_CONSTANTS",
    "DeviceParams",
    "DerivedScales",
    "FluxPoint",
    "ValidationCheck",
    "ValidationReport",
    "derive_scales",
    "validate_params",
    "reference_device",
]


@dataclass(frozen=True)
class PhysicalConstants:
    """Planck constant and elementary charge, SI units."""

    h: float
    e: float

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * math.pi)

    @property
    def phi0(self) -> float:
        """Reduced flux quantum hbar/2e in Wb."""
        return self.hbar / (2.0 * self.e)

    @property
    def flux_quantum(self) -> float:
        """Flux quantum h/2e in Wb."""
        return self.h / (2.0 * self.e)


# "si2019" holds the exact values fixed by the 2019 SI redefinition.
# "rounded" holds four-digit values, which reproduce published numbers that
# were evaluated with them (e.g. the 0.653983 uH inductance bound).
CONSTANT_SETS: dict[str, PhysicalConstants] = {
    "si2019": PhysicalConstants(h=6.62607015e-34, e=1.602176634e-19),
    "rounded": PhysicalConstants(h=6.626e-34, e=1.602e-19),
}
DEFAULT_CONSTANTS = "si2019"

_GHZ = 1e9
_NH = 1e-9


@dataclass(frozen=True)
class DeviceParams:
    """Raw circuit parameters of the two-SQUID atom and its environment.

    Parameters
    ----------
    ej_ghz : float
        Josephson energy per junction, E_J/h in GHz.
    ec_ghz : float
        Charging energy E_c/h in GHz.
    l0_nH : float
        Resonator half-inductance L_0.
    lr_nH : float
        Atom loop inductance L_r.
    cavity_ghz : float
        Cavity frequency omega_c/2pi.
    m1_m2_m3_phi0_per_A : tuple of float
        Mutual inductances of the three flux lines, in Phi0/A.
    zr_ohm : float
        Impedance of the flux-line environment.
    aphi_phi0, aic_rel, ac_e : float
        1/f noise amplitudes: flux (Phi0), relative critical current and
        charge (e).
    constants : str
        Key into :data:`CONSTANT_SETS`.
    """

    ej_ghz: float
    ec_ghz: float
    l0_nH: float
    lr_nH: float
    cavity_ghz: float
    m1_m2_m3_phi0_per_A: tuple[float, float, float] = (40.0, 40.0, 35.0)
    zr_ohm: float = 50.0
    aphi_phi0: float = 1e-6
    aic_rel: float = 1e-6
    ac_e: float = 1e-4
    constants: str = DEFAULT_CONSTANTS

    def __post_init__(self):
        object.__setattr__(
            self, "m1_m2_m3_phi0_per_A", tuple(float(m) for m in self.m1_m2_m3_phi0_per_A)
        )
        if len(self.m1_m2_m3_phi0_per_A) != 3:
            raise ParameterError("m1_m2_m3_phi0_per_A", "expected three mutual inductances")
        for f in fields(self):
            if f.name in ("constants", "m1_m2_m3_phi0_per_A"):
                continue
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ParameterError(f.name, f"must be a positive finite number, got {v!r}")
        for i, m in enumerate(self.m1_m2_m3_phi0_per_A):
            if not (math.isfinite(m) and m > 0):
                raise ParameterError(f"m1_m2_m3_phi0_per_A[{i}]", f"must be positive, got {m!r}")
        if self.constants not in CONSTANT_SETS:
            raise ParameterError(
                "constants", f"unknown set {self.constants!r}; choose from {sorted(CONSTANT_SETS)}"
            )

    @property
    def physical_constants(self) -> PhysicalConstants:
        return CONSTANT_SETS[self.constants]


@dataclass(frozen=True)
class DerivedScales:
    """Energy and frequency scales derived from :class:`DeviceParams`.

    ``lam`` is the zero-point phase spread lambda = sqrt(E_c/E_b).
    """

    ec: float
    ej: float
    eb: float
    lam: float
    lr_prime_nH: float
    omega0_ghz: float
    omegar_ghz: float
    omegar_prime_ghz: float
    omegaJ_ghz: float
    cavity_ghz: float
    c0_pF: float
    l0_nH: float
    lr_nH: float
    constants: PhysicalConstants = field(default_factory=lambda: CONSTANT_SETS[DEFAULT_CONSTANTS])

    @property
    def lam2(self) -> float:
        return self.lam * self.lam

    @property
    def inductance_bound_uH(self) -> float:
        """8 phi0^2 / E_c in microhenry."""
        c = self.constants
        return 8.0 * c.phi0**2 / (c.h * self.ec * _GHZ) * 1e6


def _phi0_sq_over_h(L_nH: float, c: PhysicalConstants) -> float:
    """phi0^2/(h L) in GHz."""
    return c.phi0**2 / (L_nH * _NH) / c.h / _GHZ


def derive_scales(p: DeviceParams) -> DerivedScales:
    """Compute the derived scales of a device.

    Uses hbar omega_0 = phi0^2/L_0, hbar omega_r' = phi0^2/L_r' with
    L_r' = 2 L_0 L_r/(2 L_0 + L_r), E_b = sqrt(8 hbar omega_r' E_c) and
    Omega_J = 1/sqrt(L_r C_J) with C_J = e^2/(2 E_c).
    """
    if not isinstance(p, DeviceParams):
        raise ParameterError("device", "expected DeviceParams")
    c = p.physical_constants
    lr_prime = 1.0 / (1.0 / p.lr_nH + 1.0 / (2.0 * p.l0_nH))
    omegar_prime = _phi0_sq_over_h(lr_prime, c)
    omegar = _phi0_sq_over_h(p.lr_nH, c)
    omega0 = _phi0_sq_over_h(p.l0_nH, c)
    eb = math.sqrt(8.0 * omegar_prime * p.ec_ghz)
    lam = math.sqrt(p.ec_ghz / eb)
    cj = c.e**2 / (2.0 * c.h * p.ec_ghz * _GHZ)
    omegaJ = 1.0 / math.sqrt(p.lr_nH * _NH * cj) / (2.0 * math.pi) / _GHZ
    wc = 2.0 * math.pi * p.cavity_ghz * _GHZ
    c0 = 1.0 / (p.l0_nH * _NH * wc * wc) * 1e12
    return DerivedScales(
        ec=float(p.ec_ghz),
        ej=float(p.ej_ghz),
        eb=eb,
        lam=lam,
        lr_prime_nH=lr_prime,
        omega0_ghz=omega0,
        omegar_ghz=omegar,
        omegar_prime_ghz=omegar_prime,
        omegaJ_ghz=omegaJ,
        cavity_ghz=float(p.cavity_ghz),
        c0_pF=c0,
        l0_nH=float(p.l0_nH),
        lr_nH=float(p.lr_nH),
        constants=c,
    )


@dataclass(frozen=True)
class FluxPoint:
    """A bias point: SQUID-loop flux f, outer-loop flux f' (radians).

    ``delta`` is the detuning pi - f from the symmetric point.
    """

    f: float
    f_prime: float

    @property
    def delta(self) -> float:
        return math.pi - self.f

    @classmethod
    def from_delta(cls, delta: float, f_prime: float) -> "FluxPoint":
        return cls(math.pi - delta, f_prime)

    def check_hamiltonian_domain(self) -> None:
        """Raise unless |delta| < pi/2 and both fluxes are finite."""
        if not (math.isfinite(self.f) and math.isfinite(self.f_prime)):
            raise FluxDomainError("flux", f"non-finite flux point {self}")
        if abs(self.delta) >= math.pi / 2:
            raise FluxDomainError("flux.f", f"|pi - f| = {abs(self.delta):.6g} must be < pi/2")


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    value: float
    limit: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the regime checks. ``passed`` is the conjunction."""

    bound_uH: float
    margin: float
    checks: tuple[ValidationCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> ValidationCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_params(
    s: DerivedScales,
    margin: float = 0.1,
    lambda_max: float = 0.3,
    ls_nH: float | None = None,
    beta_max: float = 0.1,
) -> ValidationReport:
    """Check the inductance and phase-spread assumptions of the model.

    L_0 and L_r must each sit below ``margin`` times the bound 8 phi0^2/E_c,
    and lambda below ``lambda_max``. With a loop inductance ``ls_nH`` the
    screening parameter beta_L = L_S I_c/phi0 = L_S E_J/phi0^2 is checked
    against ``beta_max``.
    """
    bound_uH = s.inductance_bound_uH
    lim_nH = margin * bound_uH * 1e3
    checks = [
        ValidationCheck("l0", s.l0_nH, lim_nH, s.l0_nH < lim_nH),
        ValidationCheck("lr", s.lr_nH, lim_nH, s.lr_nH < lim_nH),
        ValidationCheck("lambda", s.lam, lambda_max, s.lam < lambda_max),
    ]
    if ls_nH is not None:
        c = s.constants
        beta = ls_nH * _NH * s.ej * _GHZ * c.h / c.phi0**2
        checks.append(ValidationCheck("beta_l", beta, beta_max, beta < beta_max))
    return ValidationReport(bound_uH=bound_uH, margin=margin, checks=tuple(checks))


def reference_device(constants: str = "rounded") -> DeviceParams:
    """Device used for the reference figures: E_J/h = 300 GHz, E_J/E_c = 150."""
    return DeviceParams(
        ej_ghz=300.0,
        ec_ghz=2.0,
        l0_nH=0.06192867473,
        lr_nH=12.29291953901,
        cavity_ghz=2.00005254655,
        constants=constants,
    )

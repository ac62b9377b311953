"""Truncated product basis, atom Hamiltonian, parity and exact eigenstates.

States are |n; n_-> with n = 0..N_b-1 the Fock number of the phi_+ mode and
n_- = -M..M the charge difference across the two SQUIDs. The flat index is
row-major in (n, n_-), so operators are Kronecker products
``osc (x) charge``.

The exact solver uses the diagonal gauge |m> -> exp(i m alpha)|m> with
alpha = Delta/2 - pi/2. In that gauge sin(phi_- + Delta/2) becomes
cos(phi_-'), the Hamiltonian is real symmetric and parity is the plain
reflection m -> -m, so each parity sector can be solved on its own. This
keeps parity exact to rounding and makes the eigenproblem real.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ClassificationError, FluxtuneError, ParameterError
from .params import DerivedScales, FluxPoint
from .perturb import CouplingSet

__all__ = [
    "BasisSpec",
    "HermitianOperator",
    "OperatorSet",
    "Spectrum",
    "Level",
    "AtomLevels",
    "NotHermitianError",
    "FORMS",
    "build_basis",
    "build_operators",
    "assemble_atom_hamiltonian",
    "parity_operator",
    "eigensolve",
    "diagonalize_atom",
    "exact_splitting",
    "classify_levels",
    "atom_levels",
    "transition_element",
    "exact_couplings",
    "flux_derivative_operators",
    "DEFAULT_N_FOCK",
    "DEFAULT_N_CHARGE",
]

DEFAULT_N_FOCK = 15
DEFAULT_N_CHARGE = 20
FORMS = ("exact", "linearized")


class NotHermitianError(FluxtuneError, ValueError):
    """Input matrix fails the Hermiticity check."""


@dataclass(frozen=True)
class BasisSpec:
    """Truncation of the |n; n_-> product basis."""

    n_fock: int
    n_charge: int

    @property
    def dim(self) -> int:
        return self.n_fock * (2 * self.n_charge + 1)

    @property
    def n_charge_states(self) -> int:
        return 2 * self.n_charge + 1

    @property
    def charges(self) -> np.ndarray:
        return np.arange(-self.n_charge, self.n_charge + 1)

    def index(self, n: int, n_minus: int) -> int:
        if not (0 <= n < self.n_fock and -self.n_charge <= n_minus <= self.n_charge):
            raise IndexError(f"state ({n}, {n_minus}) outside basis {self}")
        return n * self.n_charge_states + (n_minus + self.n_charge)

    def state(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} outside basis of dim {self.dim}")
        n, k = divmod(index, self.n_charge_states)
        return n, k - self.n_charge


def build_basis(n_fock: int, n_charge: int) -> BasisSpec:
    """Basis with Fock cutoff ``n_fock`` (>= 2) and charge cutoff ``n_charge`` (>= 1)."""
    for name, v, lo in (("n_fock", n_fock, 2), ("n_charge", n_charge, 1)):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < lo:
            raise ParameterError(name, f"must be an integer >= {lo}, got {v!r}")
    return BasisSpec(int(n_fock), int(n_charge))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense operator ``matrix + offset * identity`` on a basis.

    Keeping a large constant out of ``matrix`` preserves relative precision
    of level differences in the eigensolver.
    """

    matrix: np.ndarray
    basis: BasisSpec | None = None
    offset: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def full(self) -> np.ndarray:
        m = np.array(self.matrix, dtype=complex)
        m[np.diag_indices_from(m)] += self.offset
        return m

    def hermiticity_error(self) -> float:
        """max |H_ij - conj(H_ji)| / max |H_ij|."""
        m = self.matrix
        scale = max(float(np.max(np.abs(m))), abs(self.offset), 1e-300)
        return float(np.max(np.abs(m - m.conj().T))) / scale


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Elementary operators for one basis and one value of lambda.

    Oscillator factors are ``n_fock x n_fock`` and charge factors are
    ``(2M+1) x (2M+1)``; :meth:`kron` lifts a pair to the product space.
    """

    basis: BasisSpec
    lam: float
    x_osc: np.ndarray
    x_eigvals: np.ndarray
    x_eigvecs: np.ndarray
    shift: np.ndarray
    n_minus_charge: np.ndarray

    def cos_plus(self, theta: float) -> np.ndarray:
        """cos(phi_+ + theta) on the oscillator factor."""
        v = self.x_eigvecs
        return (v * np.cos(self.x_eigvals + theta)) @ v.T

    def sin_plus(self, theta: float) -> np.ndarray:
        """sin(phi_+ + theta) on the oscillator factor."""
        v = self.x_eigvecs
        return (v * np.sin(self.x_eigvals + theta)) @ v.T

    def exp_minus(self, alpha: float) -> np.ndarray:
        """exp(i(phi_- + alpha)) = exp(i alpha) S on the charge factor."""
        return np.exp(1j * alpha) * self.shift

    def sin_minus(self, alpha: float) -> np.ndarray:
        u = self.exp_minus(alpha)
        return (u - u.conj().T) / 2j

    def cos_minus(self, alpha: float) -> np.ndarray:
        u = self.exp_minus(alpha)
        return (u + u.conj().T) / 2

    def kron(self, osc: np.ndarray | None, charge: np.ndarray | None) -> np.ndarray:
        a = np.eye(self.basis.n_fock) if osc is None else osc
        b = np.eye(self.basis.n_charge_states) if charge is None else charge
        return np.kron(a, b)

    @property
    def phi_plus(self) -> np.ndarray:
        return self.kron(self.x_osc, None)

    @property
    def n_minus(self) -> np.ndarray:
        return self.kron(None, self.n_minus_charge)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=32)
def _operators(basis: BasisSpec, lam: float) -> OperatorSet:
    nb = basis.n_fock
    a = np.diag(np.sqrt(np.arange(1.0, nb)), 1)
    x = lam * (a + a.T)
    w, v = np.linalg.eigh(x)
    nc = basis.n_charge_states
    shift = np.diag(np.ones(nc - 1), -1)
    return OperatorSet(
        basis=basis,
        lam=lam,
        x_osc=_readonly(x),
        x_eigvals=_readonly(w),
        x_eigvecs=_readonly(v),
        shift=_readonly(shift),
        n_minus_charge=_readonly(np.diag(basis.charges.astype(float))),
    )


def build_operators(basis: BasisSpec, scales: DerivedScales) -> OperatorSet:
    """Operators phi_+ = lambda(b + b^dagger), n_-, the charge shift S and trig factories.

    Functions of phi_+ are taken through the eigendecomposition of its
    truncated tridiagonal matrix. S|n_-> = |n_- + 1> is truncated at +-M.
    """
    return _operators(basis, float(scales.lam))


def _prefactor(scales: DerivedScales, delta: float, form: str) -> float:
    if form == "exact":
        return 4.0 * scales.ej * math.sin(delta / 2.0)
    if form == "linearized":
        return 2.0 * delta * scales.ej
    raise ParameterError("form", f"expected one of {FORMS}, got {form!r}")


def _diag_parts(basis: BasisSpec, scales: DerivedScales, n_g: float = 0.0) -> np.ndarray:
    """Diagonal of E_b n + E_c (n_- + n_g)^2 in the flat ordering."""
    osc = scales.eb * np.arange(basis.n_fock)
    ch = scales.ec * (basis.charges + n_g) ** 2
    return (osc[:, None] + ch[None, :]).ravel()


def assemble_atom_hamiltonian(
    scales: DerivedScales,
    flux: FluxPoint,
    basis: BasisSpec | None = None,
    form: str = "exact",
    n_g: float = 0.0,
) -> HermitianOperator:
    """Atom Hamiltonian H_0 + V in the |n; n_-> basis.

    H_0 = E_b(b^dagger b + 1/2) + E_c n_-^2 + 4E_J and
    V = -A cos(phi_+ + f'/2) sin(phi_- + Delta/2), with A = 4E_J sin(Delta/2)
    for ``form="exact"`` and A = 2 Delta E_J for ``form="linearized"``.
    A nonzero offset charge ``n_g`` replaces n_-^2 by (n_- + n_g)^2.

    The constant 4E_J + E_b/2 is stored in ``offset``.
    """
    basis = basis or build_basis(DEFAULT_N_FOCK, DEFAULT_N_CHARGE)
    flux.check_hamiltonian_domain()
    ops = build_operators(basis, scales)
    amp = _prefactor(scales, flux.delta, form)
    v = ops.kron(ops.cos_plus(flux.f_prime / 2.0), ops.sin_minus(flux.delta / 2.0))
    m = -amp * v
    m[np.diag_indices_from(m)] += _diag_parts(basis, scales, n_g)
    return HermitianOperator(m, basis, offset=4.0 * scales.ej + scales.eb / 2.0)


def _charge_parity(n_charge: int, delta: float) -> np.ndarray:
    ns = np.arange(-n_charge, n_charge + 1)
    p = np.zeros((ns.size, ns.size), dtype=complex)
    # row n, column -n; equivalently P|m> = (-1)^m exp(-i m Delta)|-m>
    p[n_charge + ns, n_charge - ns] = np.exp(-1j * ns * (math.pi - delta))
    return p


def parity_operator(basis: BasisSpec, delta: float) -> HermitianOperator:
    """P = sum_n |n_-> exp(-i n_-(pi - Delta)) <-n_-|, identity on the oscillator."""
    p = np.kron(np.eye(basis.n_fock), _charge_parity(basis.n_charge, delta))
    return HermitianOperator(p, basis)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Lowest eigenpairs: ``energies`` ascending, ``vectors`` as columns.

    ``parities`` holds <v|P|v> when the solve resolved parity.
    """

    energies: np.ndarray
    vectors: np.ndarray
    parities: np.ndarray | None = None
    basis: BasisSpec | None = None

    def __len__(self) -> int:
        return self.energies.size


def _fix_phase(vectors: np.ndarray, reference: np.ndarray | None = None) -> np.ndarray:
    """Rotate each column so its largest coefficient is real positive.

    Coefficients are taken in the basis whose states are the columns of
    ``reference`` (the standard basis when None).
    """
    coeff = vectors if reference is None else reference.conj().T @ vectors
    idx = np.argmax(np.abs(coeff), axis=0)
    c = coeff[idx, np.arange(coeff.shape[1])]
    ph = np.where(np.abs(c) > 0, c.conj() / np.abs(c), 1.0)
    return vectors * ph


def eigensolve(h: HermitianOperator | np.ndarray, k: int | None = None) -> Spectrum:
    """The ``k`` lowest eigenpairs of a Hermitian operator.

    Real input is solved in real arithmetic. Each eigenvector is phase-fixed
    so its largest-magnitude component is real positive.

    Raises
    ------
    NotHermitianError
        If max |H - H^dagger| exceeds 1e-12 max |H|.
    ValueError
        If ``k`` is not in 1..dim.
    """
    op = h if isinstance(h, HermitianOperator) else HermitianOperator(np.asarray(h))
    m = np.asarray(op.matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    k = n if k is None else k
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} must lie in 1..{n}")
    err = op.hermiticity_error()
    if not err <= 1e-12:
        raise NotHermitianError(f"relative Hermiticity error {err:.3g} exceeds 1e-12")
    if np.iscomplexobj(m) and not np.any(m.imag):
        m = m.real
    herm = (m + m.conj().T) / 2
    w, v = sla.eigh(herm, subset_by_index=[0, k - 1])
    v = _fix_phase(v.astype(complex))
    return Spectrum(w + op.offset, v, None, op.basis)


@functools.lru_cache(maxsize=64)
def _sector_maps(n_charge: int, delta: float) -> dict[str, np.ndarray]:
    """Charge-factor isometries from the real parity sectors and the parity basis.

    ``even``/``odd`` map real sector coordinates to the |n_-> basis through
    the gauge. ``pbasis_even``/``pbasis_odd`` hold the parity-adapted states
    |0>, |+-_m> = (e^{i m Delta/2}|m> +- (-1)^m e^{-i m Delta/2}|-m>)/sqrt 2.
    """
    ns = np.arange(-n_charge, n_charge + 1)
    alpha = delta / 2.0 - math.pi / 2.0
    gauge = np.exp(1j * ns * alpha)
    nc, r = ns.size, 1.0 / math.sqrt(2.0)
    even = np.zeros((nc, n_charge + 1), dtype=complex)
    odd = np.zeros((nc, n_charge), dtype=complex)
    pe = np.zeros_like(even)
    po = np.zeros_like(odd)
    even[n_charge, 0] = 1.0
    pe[n_charge, 0] = 1.0
    for m in range(1, n_charge + 1):
        ip, im = n_charge + m, n_charge - m
        even[ip, m], even[im, m] = r * gauge[ip], r * gauge[im]
        odd[ip, m - 1], odd[im, m - 1] = r * gauge[ip], -r * gauge[im]
        a, b = np.exp(1j * m * delta / 2), (-1) ** m * np.exp(-1j * m * delta / 2)
        pe[ip, m], pe[im, m] = r * a, r * b
        po[ip, m - 1], po[im, m - 1] = r * a, -r * b
    out = {"even": even, "odd": odd, "pbasis_even": pe, "pbasis_odd": po}
    for a in out.values():
        a.setflags(write=False)
    return out


def _real_factor(m: np.ndarray) -> np.ndarray:
    scale = max(float(np.max(np.abs(m))), 1.0)
    if float(np.max(np.abs(m.imag))) > 1e-12 * scale:
        raise FluxtuneError("charge factor is not real in the sector gauge")
    r = np.ascontiguousarray(m.real)
    return (r + r.T) / 2


def _gauge_hamiltonian(
    scales: DerivedScales,
    flux: FluxPoint,
    basis: BasisSpec,
    form: str,
    iso: np.ndarray,
    n_g: float = 0.0,
) -> np.ndarray:
    """Real symmetric T^dagger (H - offset) T with T = 1 (x) ``iso``.

    Built from the Kronecker factors, so the full complex matrix is never formed.
    """
    flux.check_hamiltonian_domain()
    ops = build_operators(basis, scales)
    amp = _prefactor(scales, flux.delta, form)
    ch = basis.charges + n_g
    q = _real_factor(iso.conj().T @ ((scales.ec * ch * ch)[:, None] * iso))
    sn = _real_factor(iso.conj().T @ ops.sin_minus(flux.delta / 2.0) @ iso)
    h = -amp * np.kron(ops.cos_plus(flux.f_prime / 2.0), sn)
    h += np.kron(np.eye(basis.n_fock), q)
    h[np.diag_indices_from(h)] += np.repeat(scales.eb * np.arange(basis.n_fock), iso.shape[1])
    return h


def _sector_solve(hs: np.ndarray, k: int, vectors: bool = True):
    k = min(k, hs.shape[0])
    return sla.eigh(hs, subset_by_index=[0, k - 1], eigvals_only=not vectors)


def diagonalize_atom(
    scales: DerivedScales,
    flux: FluxPoint,
    basis: BasisSpec | None = None,
    form: str = "exact",
    n_levels: int = 6,
) -> Spectrum:
    """Lowest ``n_levels`` exact levels with parity resolved sector by sector.

    Eigenvectors are returned in the |n; n_-> basis, phase-fixed so the
    largest coefficient in the parity-adapted basis |n; 0>, |n; +-_m> is
    real positive.
    """
    basis = basis or build_basis(DEFAULT_N_FOCK, DEFAULT_N_CHARGE)
    if n_levels < 1 or n_levels > basis.dim:
        raise ValueError(f"n_levels = {n_levels} must lie in 1..{basis.dim}")
    offset = 4.0 * scales.ej + scales.eb / 2.0
    maps = _sector_maps(basis.n_charge, float(flux.delta))
    eye = np.eye(basis.n_fock)
    parts = []
    for sector, sign in (("even", 1.0), ("odd", -1.0)):
        hs = _gauge_hamiltonian(scales, flux, basis, form, maps[sector])
        w, v = _sector_solve(hs, n_levels)
        vec = np.kron(eye, maps[sector]) @ v
        vec = _fix_phase(vec, np.kron(eye, maps["pbasis_" + sector]))
        parts.append((w, vec, np.full(w.size, sign)))
    w = np.concatenate([p[0] for p in parts])
    vec = np.concatenate([p[1] for p in parts], axis=1)
    par = np.concatenate([p[2] for p in parts])
    order = np.argsort(w, kind="stable")[:n_levels]
    p_op = parity_operator(basis, flux.delta).matrix
    measured = np.real(np.einsum("ij,ij->j", vec[:, order].conj(), p_op @ vec[:, order]))
    if np.any(np.abs(measured - par[order]) > 1e-8):
        raise FluxtuneError("sector eigenvectors do not carry the expected parity")
    return Spectrum(w[order] + offset, vec[:, order], measured, basis)


def exact_splitting(
    scales: DerivedScales,
    flux: FluxPoint,
    basis: BasisSpec | None = None,
    form: str = "exact",
) -> float:
    """E_e - E_g from the two lowest even-parity levels (GHz)."""
    basis = basis or build_basis(DEFAULT_N_FOCK, DEFAULT_N_CHARGE)
    maps = _sector_maps(basis.n_charge, float(flux.delta))
    hs = _gauge_hamiltonian(scales, flux, basis, form, maps["even"])
    w = _sector_solve(hs, 2, vectors=False)
    return float(w[1] - w[0])


@dataclass(frozen=True, eq=False)
class Level:
    energy: float
    vector: np.ndarray
    parity: float


@dataclass(frozen=True, eq=False)
class AtomLevels:
    """Classified levels: ground |g>, qubit excited |e> = |psi_+>, and |psi_->."""

    ground: Level
    excited_even: Level
    excited_odd: Level
    basis: BasisSpec | None = None

    @property
    def e_g(self) -> float:
        return self.ground.energy

    @property
    def e_e(self) -> float:
        return self.excited_even.energy

    @property
    def e_2(self) -> float:
        return self.excited_odd.energy

    @property
    def delta_e(self) -> float:
        return self.e_e - self.e_g

    @property
    def parities(self) -> tuple[float, float, float]:
        return (self.ground.parity, self.excited_even.parity, self.excited_odd.parity)


def _degenerate_groups(energies: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = [[0]]
    for i in range(1, energies.size):
        if energies[i] - energies[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def classify_levels(
    spectrum: Spectrum,
    parity: HermitianOperator | np.ndarray,
    degeneracy_tol: float = 1e-9,
) -> AtomLevels:
    """Assign |g>, |e> and |psi_-> by parity expectation, not energy order.

    Within clusters of levels closer than ``degeneracy_tol`` (GHz) the
    parity operator is diagonalized first so the states carry definite parity.
    """
    if len(spectrum) < 3:
        raise ClassificationError("need at least three eigenpairs", {"n": len(spectrum)})
    p = parity.matrix if isinstance(parity, HermitianOperator) else np.asarray(parity)
    e = np.asarray(spectrum.energies, dtype=float)
    vec = np.array(spectrum.vectors, dtype=complex)
    for grp in _degenerate_groups(e, degeneracy_tol):
        if len(grp) > 1:
            sub = vec[:, grp]
            pw, pv = np.linalg.eigh(sub.conj().T @ p @ sub)
            vec[:, grp] = _fix_phase(sub @ pv[:, ::-1])
    par = np.real(np.einsum("ij,ij->j", vec.conj(), p @ vec))
    diag = {"energies": e.tolist(), "parities": par.tolist()}
    if par[0] <= 0.5:
        raise ClassificationError("ground state is not parity-even", diag)
    i_e = i_o = None
    for i in range(1, e.size):
        if abs(par[i]) < 0.5:
            raise ClassificationError(f"ambiguous parity {par[i]:.3g} at level {i}", diag)
        if par[i] > 0.5 and i_e is None:
            i_e = i
        elif par[i] < -0.5 and i_o is None:
            i_o = i
        if i_e is not None and i_o is not None:
            break
    if i_e is None or i_o is None:
        raise ClassificationError("spectrum lacks an even or an odd excited level", diag)

    def lvl(i: int) -> Level:
        return Level(float(e[i]), vec[:, i], float(par[i]))

    return AtomLevels(lvl(0), lvl(i_e), lvl(i_o), spectrum.basis)


def atom_levels(
    scales: DerivedScales,
    flux: FluxPoint,
    basis: BasisSpec | None = None,
    form: str = "exact",
) -> AtomLevels:
    """Diagonalize and classify in one call."""
    spec = diagonalize_atom(scales, flux, basis, form, n_levels=6)
    return classify_levels(spec, parity_operator(spec.basis, flux.delta))


def transition_element(
    op: HermitianOperator | np.ndarray, bra: np.ndarray, ket: np.ndarray
) -> complex:
    """<bra|op|ket> with the bra conjugated."""
    m = op.full() if isinstance(op, HermitianOperator) else np.asarray(op)
    bra, ket = np.asarray(bra), np.asarray(ket)
    if bra.shape != (m.shape[0],) or ket.shape != (m.shape[1],):
        raise ValueError(f"dimension mismatch: op {m.shape}, bra {bra.shape}, ket {ket.shape}")
    return complex(np.vdot(bra, m @ ket))


def exact_couplings(
    levels: AtomLevels, phi_plus: np.ndarray, scales: DerivedScales
) -> CouplingSet:
    """Rabi-model coefficients from exact phi_+ matrix elements.

    g = sqrt(w0 wc) Im<e|phi_+|g>, g_x = -sqrt(w0 wc) Re<e|phi_+|g>,
    g_0 = -sqrt(w0 wc)(<e|phi_+|e> + <g|phi_+|g>)/2 and
    g_z = -sqrt(w0 wc)(<e|phi_+|e> - <g|phi_+|g>)/2, all as omega/2pi in GHz.
    """
    g_v, e_v = levels.ground.vector, levels.excited_even.vector
    eg = transition_element(phi_plus, e_v, g_v)
    ee = transition_element(phi_plus, e_v, e_v).real
    gg = transition_element(phi_plus, g_v, g_v).real
    k = math.sqrt(scales.omega0_ghz * scales.cavity_ghz)
    return CouplingSet(
        g=k * eg.imag,
        g0=-k * (ee + gg) / 2.0,
        gz=-k * (ee - gg) / 2.0,
        gx=-k * eg.real,
        cavity_ghz=scales.cavity_ghz,
    )


def flux_derivative_operators(
    scales: DerivedScales, flux: FluxPoint, basis: BasisSpec | None = None
) -> dict[str, np.ndarray]:
    """dH/df_i (GHz per radian) for the three flux lines, exact potential.

    With a = phi_+ + f'/2 and b = phi_- + Delta the SQUID-loop derivatives are
    dH/df_1 = E_J sin(a + b) and dH/df_2 = -E_J sin(a - b); the outer loop
    gives dH/df' = 2E_J sin(Delta/2) sin(a) sin(phi_- + Delta/2). Keys are
    ``"f1"``, ``"f2"``, ``"f3"``.
    """
    basis = basis or build_basis(DEFAULT_N_FOCK, DEFAULT_N_CHARGE)
    ops = build_operators(basis, scales)
    d, fp = flux.delta, flux.f_prime
    sa, ca = ops.sin_plus(fp / 2.0), ops.cos_plus(fp / 2.0)
    sb, cb = ops.sin_minus(d), ops.cos_minus(d)
    s_ab = ops.kron(sa, cb)
    c_ab = ops.kron(ca, sb)
    ej = scales.ej
    return {
        "f1": ej * (s_ab + c_ab),
        "f2": -ej * (s_ab - c_ab),
        "f3": 2.0 * ej * math.sin(d / 2.0) * ops.kron(sa, ops.sin_minus(d / 2.0)),
    }

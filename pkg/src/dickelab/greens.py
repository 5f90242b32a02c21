"""Inverse Keldysh Green's functions of the dissipative atom-cavity model.

Everything is evaluated on the real frequency axis in units where the atomic
frequency sets the scale.  The cavity mode (detuning ``delta``, decay
``kappa``) sees a flat Markovian bath; the atomic mode is damped by the
sub-ohmic bath of :mod:`dickelab.bath`.  Integrating out the atoms gives a
2x2 photonic action; a rotation to two real fields isolates the soft mode
``x`` whose exact inverse propagators are available in closed form
(`x_inverse_exact`).  The atomic analog ``phi`` is provided by
`phi_inverse_exact`.

Near the critical coupling the inverse propagators involve differences of
O(1) quantities that cancel to one part in 1e10; all user-facing weights are
therefore built on restructured, cancellation-free expressions (see
`_photon_det`) so that distances to criticality of 1e-10 remain fully
resolved in float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import bath as _bath
from .bath import BathParams, spectral_density, thermal_factor
from .errors import NumericsError, ValidationError

__all__ = [
    "Scenario",
    "ModelParams",
    "InverseGreens2x2",
    "LowFreqCoeffs",
    "standard_params",
    "critical_coupling",
    "bare_inverse",
    "photon_effective_inverse",
    "atom_effective_inverse",
    "x_inverse_exact",
    "phi_inverse_exact",
    "x_inverse_lowfreq",
    "lowfreq_coefficients",
    "distribution_function",
    "distribution_lowfreq",
    "photon_keldysh_weight",
    "photon_retarded_element",
    "x_keldysh_weight",
    "x_retarded",
    "rotation_matrices",
]


class Scenario(str, Enum):
    """The four bath configurations studied (rows of the scenario table)."""

    BOTH_TZERO = "both-tzero"        # both baths, T_b = 0 (or T_b > 0 with mu_b < 0)
    BOTH_THERMAL = "both-thermal"    # both baths, T_b > 0 and mu_b = 0
    MB_ONLY = "mb-only"              # Markovian bath only (gamma = 0)
    NMB_ONLY = "nmb-only"            # colored bath only (kappa = 0)


@dataclass(frozen=True)
class ModelParams:
    """Microscopic model constants.

    ``markovian_on`` / ``nonmarkovian_on`` switch the two baths; switching one
    off forces ``kappa`` / ``gamma`` to exactly zero.  ``self_energy`` selects
    the bath self-energy used everywhere: ``"closed"`` is the cutoff-free
    closed form; ``"finite-cutoff"`` uses the exact finite-``omega_M``
    expression renormalised so K(0) = 0 (the constant is a bath-induced shift
    of the atomic frequency, and renormalising it preserves the
    critical-coupling formula).
    """

    delta: float
    kappa: float
    omega_z: float
    y: float
    bath: BathParams
    markovian_on: bool = True
    nonmarkovian_on: bool = True
    n_atoms: float = math.inf
    self_energy: str = "closed"

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")
        if self.kappa < 0.0 or self.y < 0.0:
            raise ValidationError("kappa and y must be >= 0")
        if self.n_atoms < 1:
            raise ValidationError("n_atoms must be >= 1")
        if not (self.markovian_on or self.nonmarkovian_on):
            raise ValidationError("at least one bath must be on (closed system is out of scope)")
        if self.self_energy not in ("closed", "finite-cutoff"):
            raise ValidationError(f"unknown self_energy mode {self.self_energy!r}")
        if not self.markovian_on and self.kappa != 0.0:
            object.__setattr__(self, "kappa", 0.0)
        if not self.nonmarkovian_on and self.bath.gamma != 0.0:
            object.__setattr__(self, "bath", replace(self.bath, gamma=0.0))
        if self.bath.omega_z != self.omega_z:
            raise ValidationError("bath.omega_z must equal ModelParams.omega_z")

    @property
    def scenario(self) -> Scenario:
        if self.markovian_on and self.nonmarkovian_on:
            if self.bath.T_b > 0.0 and self.bath.mu_b == 0.0:
                return Scenario.BOTH_THERMAL
            return Scenario.BOTH_TZERO
        if self.markovian_on:
            return Scenario.MB_ONLY
        return Scenario.NMB_ONLY


def standard_params(
    s: float,
    dy_rel: float = 0.0,
    gamma: float = 0.1,
    delta: float = 2.0,
    kappa: float = 0.5,
    omega_z: float = 1.0,
    omega_M: float | None = None,
    T_b: float = 0.0,
    mu_b: float = 0.0,
    markovian_on: bool = True,
    nonmarkovian_on: bool = True,
    n_atoms: float = math.inf,
    self_energy: str = "closed",
) -> ModelParams:
    """Parameter set of the reference figures (delta=2, kappa=.5, gamma=.1 in
    omega_z units) at relative distance ``dy_rel`` = (y_c - y)/y_c from the
    critical coupling."""
    kap = kappa if markovian_on else 0.0
    gam = gamma if nonmarkovian_on else 0.0
    b = BathParams(gamma=gam, s=s, omega_z=omega_z, omega_M=omega_M, T_b=T_b, mu_b=mu_b)
    yc = math.sqrt((delta**2 + kap**2) * omega_z / delta)
    return ModelParams(
        delta=delta,
        kappa=kap,
        omega_z=omega_z,
        y=yc * (1.0 - dy_rel),
        bath=b,
        markovian_on=markovian_on,
        nonmarkovian_on=nonmarkovian_on,
        n_atoms=n_atoms,
        self_energy=self_energy,
    )


@dataclass(frozen=True)
class InverseGreens2x2:
    """Frequency-resolved 2x2 inverse propagators in the doubled field basis."""

    omega: float
    pR: np.ndarray
    pA: np.ndarray
    pK: np.ndarray

    def __post_init__(self):
        scale = max(np.abs(self.pR).max(), 1.0)
        if np.abs(self.pA - self.pR.conj().T).max() > 1e-12 * scale:
            raise NumericsError("pA is not the conjugate transpose of pR")
        kscale = max(np.abs(self.pK).max(), 1e-300)
        if np.abs(self.pK + self.pK.conj().T).max() > 1e-12 * kscale:
            raise NumericsError("pK is not anti-Hermitian")


@dataclass(frozen=True)
class LowFreqCoeffs:
    """Constants of the single-field low-frequency theory."""

    r: float
    v_I: float
    v_R: float
    v: float
    kappa_eff: float
    g_ph: float
    g_at: float
    T_eff: float      # NaN when kappa = 0 (no Markovian bath, no effective temperature)
    r_at: float
    v_at_I: float
    v_at_R: float


def critical_coupling(p: ModelParams) -> float:
    """y_c = sqrt((delta^2 + kappa^2) * omega_z / delta); bath-independent."""
    return math.sqrt((p.delta**2 + p.kappa**2) * p.omega_z / p.delta)


# ---------------------------------------------------------------------------
# bare propagators and self-energies


def _K(omega: float, branch: str, p: ModelParams) -> complex:
    if p.bath.gamma == 0.0:
        return 0.0j
    if p.self_energy == "closed":
        return _bath.self_energy_closed(omega, branch, p.bath)
    k = _bath.self_energy_finite_cutoff(omega, branch, p.bath)
    return k - _bath.self_energy_cutoff_artifact(0.0, p.bath)


def _pr_ph(omega: float, p: ModelParams) -> complex:
    return complex(omega - p.delta, p.kappa)


def _pr_at(omega: float, p: ModelParams) -> complex:
    return omega - p.omega_z - _K(omega, "retarded", p)


def _rho(omega: float, p: ModelParams) -> float:
    """Spectral density consistent with the selected self-energy mode.

    The closed-form self-energy carries Im K^R = -pi * gamma * (w/wz)^s, i.e.
    the uncut density; pairing it with the Lorentz-cut density would violate
    the fluctuation-dissipation identity of the bare bath at order
    (omega/omega_M)^2.
    """
    if p.self_energy == "finite-cutoff":
        return spectral_density(omega, p.bath)
    if omega <= 0.0 or p.bath.gamma == 0.0:
        return 0.0
    return p.bath.gamma * (omega / p.omega_z) ** p.bath.s


def _pk_at(omega: float, p: ModelParams) -> complex:
    """Bare atomic Keldysh component 2i*pi*rho(omega) with thermal factor."""
    rho = _rho(omega, p)
    if rho == 0.0:
        return 0.0j
    th = 1.0
    if p.bath.T_b > 0.0:
        th = thermal_factor(omega, p.bath.T_b, p.bath.mu_b)
    return 2j * math.pi * rho * th


def bare_inverse(which: str, omega: float, p: ModelParams):
    """Bare inverse (P^R, P^A, P^K) of the requested mode.

    Photon: (omega - delta + i*kappa, conj, 2i*kappa).
    Atom:   (omega - omega_z - K^R(omega), conj, 2i*pi*rho(omega) [* coth]).
    """
    if which == "photon":
        pr = _pr_ph(omega, p)
        return pr, pr.conjugate(), 2j * p.kappa
    if which == "atom":
        pr = _pr_at(omega, p)
        return pr, pr.conjugate(), _pk_at(omega, p)
    raise ValidationError(f"which must be 'photon' or 'atom', got {which!r}")


def _sigma_ph_diff(omega: float, p: ModelParams) -> complex:
    """sigma(omega) - sigma(0) where Sigma_ph = y^2 * sigma; cancellation-free.

    sigma(omega) = -(1/4) (1/P^R_at(omega) + 1/P^A_at(-omega)), sigma(0) =
    1/(2*omega_z).  Restructured so no large-term cancellation occurs at small
    omega.
    """
    kr = _K(omega, "retarded", p)
    ka = _K(-omega, "advanced", p)
    pr = omega - p.omega_z - kr
    pa = -omega - p.omega_z - ka
    # at gamma = 0 the bare atomic propagator has a real pole; quadrature
    # nodes landing exactly on it see the (finite) G -> 0 limit
    if pr == 0.0:
        pr = 1e-300
    if pa == 0.0:
        pa = 1e-300
    return ((kr - omega) / pr + (ka + omega) / pa) / (4.0 * p.omega_z)


def _sigma_at_diff(omega: float, p: ModelParams) -> complex:
    """Atomic analog of `_sigma_ph_diff`; photon propagators carry no branch cut."""
    pr0 = complex(-p.delta, p.kappa)
    pr = _pr_ph(omega, p)
    pa = complex(-omega - p.delta, -p.kappa)
    return (omega / 4.0) * (1.0 / (pr * pr0) - 1.0 / (pa * pr0.conjugate()))


def _d_of(omega: float, p: ModelParams) -> complex:
    """Effective Keldysh bath seen by the photons after integrating out atoms."""
    y2 = p.y**2
    out = 0.0j
    for nu in (omega, -omega):
        pk = _pk_at(nu, p)
        if pk != 0.0:
            out += pk / abs(_pr_at(nu, p)) ** 2
    return (y2 / 4.0) * out


def _g_of(omega: float, p: ModelParams) -> complex:
    """Effective Keldysh bath seen by the atoms after integrating out photons."""
    if p.kappa == 0.0:
        return 0.0j
    y2 = p.y**2
    return (y2 / 4.0) * 2j * p.kappa * (
        1.0 / abs(_pr_ph(omega, p)) ** 2 + 1.0 / abs(_pr_ph(-omega, p)) ** 2
    )


# ---------------------------------------------------------------------------
# effective 2x2 actions


def photon_effective_inverse(omega: float, p: ModelParams) -> InverseGreens2x2:
    """2x2 photonic inverse propagators after integrating out the atoms.

    Diagonal retarded entries are the bare P^R_ph(omega), P^A_ph(-omega)
    shifted by the self-energy Sigma(omega) = -(y^2/4)(1/P^R_at(omega) +
    1/P^A_at(-omega)) that also fills the anomalous off-diagonals; the
    Keldysh block adds the induced noise d(omega) on every entry.
    """
    sig = p.y**2 * (_sigma_ph_diff(omega, p) + 1.0 / (2.0 * p.omega_z))
    prr = _pr_ph(omega, p)
    paa = complex(-omega - p.delta, -p.kappa)
    pR = np.array([[prr + sig, sig], [sig, paa + sig]])
    d = _d_of(omega, p)
    pk_ph = 2j * p.kappa
    pK = np.array([[pk_ph + d, d], [d, pk_ph + d]])
    return InverseGreens2x2(omega=omega, pR=pR, pA=pR.conj().T, pK=pK)


def atom_effective_inverse(omega: float, p: ModelParams) -> InverseGreens2x2:
    """Atomic mirror image of `photon_effective_inverse`."""
    if abs(_pr_ph(omega, p)) == 0.0 or abs(_pr_ph(-omega, p)) == 0.0:
        raise NumericsError("photon inverse propagator vanishes at this frequency")
    sig = p.y**2 * (_sigma_at_diff(omega, p) + p.delta / (2.0 * (p.delta**2 + p.kappa**2)))
    prr = _pr_at(omega, p)
    paa = (-omega - p.omega_z - _K(-omega, "advanced", p))
    pR = np.array([[prr + sig, sig], [sig, paa + sig]])
    g = _g_of(omega, p)
    pK = np.array([[_pk_at(omega, p) + g, g], [g, _pk_at(-omega, p) + g]])
    return InverseGreens2x2(omega=omega, pR=pR, pA=pR.conj().T, pK=pK)


def rotation_matrices(p: ModelParams):
    """Field rotation (classical, quantum) that diagonalises the photonic
    retarded block at zero frequency at the critical point."""
    ang = math.atan2(-p.delta, p.kappa)
    ep, em = complex(math.cos(ang), math.sin(ang)), complex(math.cos(ang), -math.sin(ang))
    r_cl = np.array([[1.0, 1.0], [em, ep]])
    r_q = np.array([[1.0, 1.0], [-ep, -em]])
    return r_cl, r_q


# ---------------------------------------------------------------------------
# exact soft-mode (x) and atomic soft-mode (phi) inverse propagators


def _photon_det(omega: float, p: ModelParams) -> complex:
    """det of the photonic retarded block, restructured so the near-critical
    cancellation is done analytically:

        det = (delta/omega_z) * (y_c^2 - y^2) - omega^2 - 2i*omega*kappa
              - 2*delta*y^2*(sigma(omega) - sigma(0)),

    with y_c^2 - y^2 evaluated as dy*(2*y_c - dy)."""
    yc = critical_coupling(p)
    dy = yc - p.y
    return (
        (p.delta / p.omega_z) * dy * (2.0 * yc - dy)
        - omega**2
        - 2j * omega * p.kappa
        - 2.0 * p.delta * p.y**2 * _sigma_ph_diff(omega, p)
    )


def photon_retarded_element(omega: float, p: ModelParams):
    """([G^R]_11, [G^R]_12) of the photonic effective action, cancellation-free."""
    det = _photon_det(omega, p)
    sig = p.y**2 * (_sigma_ph_diff(omega, p) + 1.0 / (2.0 * p.omega_z))
    paa = complex(-omega - p.delta, -p.kappa)
    return (paa + sig) / det, -sig / det


def photon_keldysh_weight(omega: float, p: ModelParams) -> float:
    """Exact spectral weight i[G^K(omega)]_11 = <|a_cl(omega)|^2> (real, >= 0)."""
    g11, g12 = photon_retarded_element(omega, p)
    a = _d_of(omega, p).imag
    two_kap = 2.0 * p.kappa
    return (two_kap + a) * (abs(g11) ** 2 + abs(g12) ** 2) + 2.0 * a * (
        g11 * g12.conjugate()
    ).real


def x_inverse_exact(omega: float, p: ModelParams):
    """Exact inverse propagators (P^R, P^A, P^K) of the real soft mode x.

    P^R_x = dSigma + i*omega*chi + omega^2/(2*delta) with dSigma =
    Sigma(omega, y) - Sigma(0, y_c); P^K_x = d(omega) + 2i*kappa_eff*(1 +
    omega^2 (1+chi^2)/(4 M^2)).  Valid for kappa >= 0 (the rotation is
    continuous in the kappa -> 0 limit).  The sign of the quadratic term is
    pinned by the bare-cavity limit, where P^R_x must reduce to the
    inverse of the closed-form quadrature propagator.
    """
    yc = critical_coupling(p)
    dy = yc - p.y
    chi = p.kappa / p.delta
    m_gap = 0.5 * p.delta * (1.0 + chi**2)
    d_sigma = p.y**2 * _sigma_ph_diff(omega, p) - dy * (2.0 * yc - dy) / (2.0 * p.omega_z)
    pr = d_sigma + 1j * omega * chi + omega**2 / (2.0 * p.delta)
    kap_eff = 0.5 * p.kappa * (1.0 + chi**2)
    pk = _d_of(omega, p) + 2j * kap_eff * (1.0 + omega**2 * (1.0 + chi**2) / (4.0 * m_gap**2))
    return pr, pr.conjugate(), pk


def phi_inverse_exact(omega: float, p: ModelParams):
    """Exact inverse propagators of the real atomic soft mode phi.

    Built from the rotated atomic blocks

        Ptilde^R = (1/4) [[4 dSigma_at - K_+, -i(K_- + 2w)],
                          [ i(K_- + 2w),      -K_+ - 2 omega_z]],
        Ptilde^K = (1/4) [[P^K_+ + 4 g(w), -i P^K_-], [i P^K_-, P^K_+]],

    by eliminating the gapped component with the exact Keldysh Schur
    complement (K_+- = K^A(-w) +- K^R(w), P^K_+- = P^K_at(w) +- P^K_at(-w)).
    """
    yc = critical_coupling(p)
    dy = yc - p.y
    kr = _K(omega, "retarded", p)
    ka = _K(-omega, "advanced", p)
    kp, km = ka + kr, ka - kr
    sig_at0 = p.delta / (2.0 * (p.delta**2 + p.kappa**2))
    d_sigma = p.y**2 * _sigma_at_diff(omega, p) - dy * (2.0 * yc - dy) * sig_at0
    pR = 0.25 * np.array(
        [
            [4.0 * d_sigma - kp, -1j * (km + 2.0 * omega)],
            [1j * (km + 2.0 * omega), -kp - 2.0 * p.omega_z],
        ]
    )
    pk_p = _pk_at(omega, p) + _pk_at(-omega, p)
    pk_m = _pk_at(omega, p) - _pk_at(-omega, p)
    g = _g_of(omega, p)
    pK = 0.25 * np.array([[pk_p + 4.0 * g, -1j * pk_m], [1j * pk_m, pk_p]])
    return _schur_keldysh(pR, pK)


def _schur_keldysh(pR: np.ndarray, pK: np.ndarray):
    """Eliminate field 2 of a two-field Keldysh action; exact.

    Returns the scalar (P^R, P^A, P^K) of field 1.  Uses P^A = (P^R)^dagger.
    """
    pr = pR[0, 0] - pR[0, 1] * pR[1, 0] / pR[1, 1]
    pa22 = pR[1, 1].conjugate()
    pa21 = pR[0, 1].conjugate()
    pk = (
        pK[0, 0]
        - pR[0, 1] / pR[1, 1] * pK[1, 0]
        - pK[0, 1] / pa22 * pa21
        + pR[0, 1] / pR[1, 1] * pK[1, 1] / pa22 * pa21
    )
    return pr, pr.conjugate(), pk


def x_keldysh_weight(omega: float, p: ModelParams) -> float:
    """i G^K_x(omega) = Im P^K_x / |P^R_x|^2 (real, even in omega)."""
    pr, _, pk = x_inverse_exact(omega, p)
    if abs(pr) > 1e150:  # on a bare atomic pole (gamma = 0): G -> 0
        return 0.0
    return pk.imag / abs(pr) ** 2


def x_retarded(omega: float, p: ModelParams) -> complex:
    """G^R_x(omega) = 1 / P^R_x(omega)."""
    pr, _, _ = x_inverse_exact(omega, p)
    if abs(pr) > 1e150:
        return 0.0j
    return 1.0 / pr


# ---------------------------------------------------------------------------
# low-frequency theory


def lowfreq_coefficients(p: ModelParams) -> LowFreqCoeffs:
    """All derived constants of the single-field low-frequency action."""
    yc = critical_coupling(p)
    dy = yc - p.y
    s = p.bath.s
    gam = p.bath.gamma
    wz = p.omega_z
    chi = p.kappa / p.delta
    v_i = yc**2 * math.pi * gam / (4.0 * wz**2)
    v_r = v_i / math.tan(math.pi * s / 2.0)
    v = v_i / (math.sin(math.pi * s / 2.0) * wz**s)
    kap_eff = 0.5 * p.kappa * (1.0 + chi**2)
    g_ph = (p.delta**2 + p.kappa**2) ** 2 / (2.0 * p.delta**2 * wz)
    g_at = 0.5 * yc**2 * p.delta / (p.delta**2 + p.kappa**2)
    t_eff = (p.kappa**2 + p.delta**2) / (4.0 * p.delta) if p.kappa > 0.0 else math.nan
    v_at_i = math.pi * gam / 4.0
    v_at_r = v_at_i * (1.0 / math.tan(math.pi * s)) + v_at_i / math.sin(math.pi * s)
    return LowFreqCoeffs(
        r=yc * dy / wz,
        v_I=v_i,
        v_R=v_r,
        v=v,
        kappa_eff=kap_eff,
        g_ph=g_ph,
        g_at=g_at,
        T_eff=t_eff,
        r_at=dy * yc * p.delta / (p.kappa**2 + p.delta**2),
        v_at_I=v_at_i,
        v_at_R=v_at_r,
    )


def x_inverse_lowfreq(omega: float, delta_y: float, p: ModelParams, scenario: Scenario):
    """Leading low-frequency (P^R, P^A, P^K) of the soft mode per scenario."""
    if delta_y < 0.0:
        raise ValidationError("delta_y must be >= 0 (disordered side)")
    c = lowfreq_coefficients(p)
    yc = critical_coupling(p)
    r = yc * delta_y / p.omega_z
    s = p.bath.s
    wrel = abs(omega) / p.omega_z
    frac = wrel**s * complex(-c.v_R, c.v_I * np.sign(omega))
    scenario = Scenario(scenario)
    if scenario in (Scenario.BOTH_TZERO, Scenario.NMB_ONLY):
        pr = -r + frac
        if scenario is Scenario.BOTH_TZERO:
            pk = 2j * c.kappa_eff
        else:
            pk = 2j * c.v_I * wrel**s
    elif scenario is Scenario.BOTH_THERMAL:
        if p.bath.T_b <= 0.0:
            raise ValidationError("both-thermal scenario requires T_b > 0")
        pr = -r + frac
        pk = 4j * c.v_I * p.bath.T_b / (p.omega_z**s * abs(omega) ** (1.0 - s))
    elif scenario is Scenario.MB_ONLY:
        pr = -r + 1j * omega * p.kappa / p.delta
        pk = 2j * c.kappa_eff
    else:  # pragma: no cover - Scenario() call above rejects unknown names
        raise ValidationError(f"unknown scenario {scenario!r}")
    return pr, pr.conjugate(), pk


# ---------------------------------------------------------------------------
# distribution functions


def distribution_function(which: str, omega: float, p: ModelParams) -> float:
    """Exact F(omega) = G^K / (G^R - G^A) = P^K / (P^R - P^A) of the soft mode."""
    if which in ("photon-x", "x"):
        pr, pa, pk = x_inverse_exact(omega, p)
    elif which in ("atom-phi", "phi"):
        pr, pa, pk = phi_inverse_exact(omega, p)
    else:
        raise ValidationError(f"which must be 'photon-x' or 'atom-phi', got {which!r}")
    denom = pr - pa
    if abs(denom) == 0.0:
        raise NumericsError(f"G^R - G^A vanishes at omega={omega}")
    f = pk / denom
    return float(f.real)


def distribution_lowfreq(which: str, omega: float, p: ModelParams, scenario: Scenario) -> float:
    """Scenario prediction for F(omega) in the omega -> 0 limit."""
    c = lowfreq_coefficients(p)
    s = p.bath.s
    scenario = Scenario(scenario)
    sgn = float(np.sign(omega))
    if scenario is Scenario.BOTH_TZERO:
        if which in ("photon-x", "x"):
            amp = c.kappa_eff / c.v_I
        else:
            yc2 = critical_coupling(p) ** 2
            amp = (yc2 * p.kappa / (p.delta**2 + p.kappa**2)) / (2.0 * c.v_at_I)
        return amp * (p.omega_z / abs(omega)) ** s * sgn
    if scenario is Scenario.BOTH_THERMAL:
        return 2.0 * p.bath.T_b / omega
    if scenario is Scenario.MB_ONLY:
        return 2.0 * c.T_eff / omega
    return sgn

"""Sub-ohmic bath: spectral density, self-energies, thermal occupation.

The atomic mode is damped by a bosonic bath with spectral weight

    rho(w) = gamma * Theta(w) * (w/omega_z)**s / (1 + (w/omega_M)**2),

with 0 < s < 1.  The retarded/advanced self-energy it induces,

    K(w) = PV int_0^inf rho(w') / (w - w') dw'  -/+  i*pi*rho(w),

has the closed form (pi*gamma/sin(pi*s)) * (|w|/omega_z)**s *
(Theta(w)*exp(-/+ i*pi*s) + Theta(-w)) in the limit omega_M -> inf.  At
finite cutoff the principal-value integral additionally contains a smooth
cutoff artifact, computed exactly in `self_energy_cutoff_artifact`; the
quadrature oracle `self_energy_pv` is compared against closed form plus
artifact.  All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureError, ValidationError

__all__ = [
    "BathParams",
    "spectral_density",
    "self_energy_closed",
    "self_energy_finite_cutoff",
    "self_energy_cutoff_artifact",
    "self_energy_pv",
    "thermal_factor",
]


@dataclass(frozen=True)
class BathParams:
    """Microscopic constants of the sub-ohmic bath (frequencies in omega_z units).

    gamma   : dissipation strength
    s       : sub-ohmic exponent, 0 < s < 1
    omega_z : atomic frequency / spectral reference
    omega_M : UV cutoff (default 1e4 * omega_z)
    T_b     : bath temperature (k_B = 1)
    mu_b    : bath chemical potential, <= 0
    """

    gamma: float
    s: float
    omega_z: float = 1.0
    omega_M: float | None = None
    T_b: float = 0.0
    mu_b: float = 0.0

    def __post_init__(self):
        if self.omega_M is None:
            object.__setattr__(self, "omega_M", 1.0e4 * self.omega_z)
        if not 0.0 < self.s < 1.0:
            raise ValidationError(f"sub-ohmic exponent must satisfy 0 < s < 1, got s={self.s}")
        if self.gamma < 0.0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
        if self.omega_z <= 0.0 or self.omega_M <= 0.0:
            raise ValidationError("omega_z and omega_M must be positive")
        if self.T_b < 0.0:
            raise ValidationError(f"T_b must be >= 0, got {self.T_b}")
        if self.mu_b > 0.0:
            raise ValidationError(f"mu_b must be <= 0 for a bosonic bath, got {self.mu_b}")


def spectral_density(omega, p: BathParams):
    """Bath spectral weight rho(omega); exactly zero for omega <= 0.

    Accepts scalars or arrays.
    """
    w = np.asarray(omega, dtype=float)
    pos = w > 0.0
    safe = np.where(pos, w, 1.0)
    out = np.where(
        pos,
        p.gamma * (safe / p.omega_z) ** p.s / (1.0 + (safe / p.omega_M) ** 2),
        0.0,
    )
    return float(out) if np.isscalar(omega) else out


def _check_branch(branch: str) -> int:
    if branch in ("retarded", "R"):
        return -1
    if branch in ("advanced", "A"):
        return +1
    raise ValidationError(f"branch must be 'retarded' or 'advanced', got {branch!r}")


def self_energy_closed(omega: float, branch: str, p: BathParams) -> complex:
    """Bath self-energy K(omega) in the omega_M -> inf limit.

    Retarded branch carries exp(-i*pi*s) on the positive-frequency side,
    advanced its conjugate.  The omega = 0 value is defined as 0 (the
    |omega|**s limit), which keeps frequency grids NaN-free.
    """
    sign = _check_branch(branch)
    if omega == 0.0:
        return 0.0j
    mag = math.pi * p.gamma / math.sin(math.pi * p.s) * (abs(omega) / p.omega_z) ** p.s
    if omega > 0.0:
        return mag * complex(math.cos(math.pi * p.s), sign * math.sin(math.pi * p.s))
    return complex(mag, 0.0)


def self_energy_cutoff_artifact(omega: float, p: BathParams) -> float:
    """Exact (real) difference between the finite-cutoff PV self-energy and
    the omega_M -> inf closed form.

    Derived by contour integration of the Lorentz-cut power-law density:

        K_M(w) = K_inf(w) * wM^2/(w^2+wM^2)
                 - (pi*g/sin(pi*s)) (wM/wz)^s * wM*(wM*cos(pi*s/2) - w*sin(pi*s/2))
                   / (w^2 + wM^2).

    This term is a smooth frequency-shift/slope renormalisation of order
    gamma*(omega_M/omega_z)**s; it is what makes a naive comparison of the
    quadrature oracle with the closed form fail at any finite cutoff.
    """
    wM, s = p.omega_M, p.s
    pref = math.pi * p.gamma / math.sin(math.pi * s) * (wM / p.omega_z) ** s
    num = wM * (wM * math.cos(math.pi * s / 2) - omega * math.sin(math.pi * s / 2))
    return -pref * num / (omega**2 + wM**2)


def self_energy_finite_cutoff(omega: float, branch: str, p: BathParams) -> complex:
    """Exact self-energy of the Lorentz-cut density at finite omega_M.

    Equals `self_energy_pv` to quadrature accuracy, but in closed form.
    """
    sign = _check_branch(branch)
    lor = p.omega_M**2 / (omega**2 + p.omega_M**2)
    base = self_energy_closed(omega, branch, p) * lor
    art = self_energy_cutoff_artifact(omega, p)
    # artifact is real and branch-independent; imaginary part -/+ pi*rho_M is
    # already carried by base through the Lorentz factor
    del sign
    return base + art


def _pv_real_part(omega: float, p: BathParams, tol: float) -> tuple[float, float]:
    """PV int_0^inf rho(w')/(omega - w') dw' by singularity subtraction.

    The pole at w' = omega (omega > 0) is removed analytically over the
    symmetric window [omega/2, 3*omega/2]; the remainder is integrated on
    log-spaced segments up to 100*omega_M with an analytic power tail.
    """
    upper = 100.0 * p.omega_M
    total = 0.0
    errors = 0.0

    def seg(f, a, b, pts=None):
        nonlocal total, errors
        val, err = quad(f, a, b, epsabs=0.0, epsrel=tol, limit=200, points=pts)
        total += val
        errors += abs(err)

    lo_floor = 1e-12 * p.omega_z
    if omega > 0.0:
        rho_w = spectral_density(omega, p)
        edges = np.geomspace(lo_floor, omega / 2.0, 30)
        a = 0.0
        for b in edges:
            seg(lambda x: spectral_density(x, p) / (omega - x), a, b)
            a = b
        # subtracted window: the subtracted pole integrates to zero by symmetry
        seg(
            lambda x: (spectral_density(x, p) - rho_w) / (omega - x),
            omega / 2.0,
            1.5 * omega,
            pts=[omega],
        )
        start = 1.5 * omega
    else:
        start = 0.0
    edges = np.geomspace(max(start, lo_floor), upper, 80)
    a = start
    for b in edges:
        if b <= a:
            continue
        seg(lambda x: spectral_density(x, p) / (omega - x), a, b)
        a = b
    # tail beyond 100*omega_M: expand rho/(omega - w') in 1/w' to three orders
    s, wm = p.s, p.omega_M
    pref = p.gamma * wm**2 / p.omega_z**s
    tail = -pref * (
        upper ** (s - 2.0) / (2.0 - s)
        + omega * upper ** (s - 3.0) / (3.0 - s)
        - wm**2 * upper ** (s - 4.0) / (4.0 - s)
    )
    total += tail
    if errors > max(abs(total), 1.0) * tol * 50.0:
        raise QuadratureError("PV self-energy quadrature did not converge", estimate=errors)
    return total, errors


def self_energy_pv(omega: float, branch: str, p: BathParams, tol: float = 1e-10) -> complex:
    """Quadrature oracle for the self-energy at finite cutoff.

    Real part from the principal-value integral over the finite-cutoff
    density, imaginary part -/+ pi*rho(omega).  Raises QuadratureError with
    the achieved estimate if the requested tolerance is not met.
    """
    sign = _check_branch(branch)
    if omega == 0.0:
        raise ValidationError("self_energy_pv requires omega != 0")
    if tol <= 0.0:
        raise ValidationError("tol must be positive")
    if p.gamma == 0.0:
        return 0.0j
    re, _ = _pv_real_part(omega, p, tol)
    return complex(re, sign * math.pi * spectral_density(omega, p))


def thermal_factor(omega: float, T_b: float, mu_b: float = 0.0) -> float:
    """Occupation factor coth((omega - mu_b)/(2 T_b)).

    At T_b = 0 this degenerates to sgn(omega - mu_b); the measure-zero point
    omega = mu_b is assigned 0 (odd-limit convention).
    """
    if T_b < 0.0:
        raise ValidationError("T_b must be >= 0")
    if mu_b > 0.0:
        raise ValidationError("mu_b must be <= 0")
    x = omega - mu_b
    if T_b == 0.0:
        return float(np.sign(x))
    arg = x / (2.0 * T_b)
    if arg == 0.0:
        return 0.0
    # 1/tanh is stable; series takes over where tanh underflows
    if abs(arg) < 1e-150:
        return 1.0 / arg
    return 1.0 / math.tanh(arg)

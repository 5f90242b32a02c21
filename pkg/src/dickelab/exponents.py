"""Power-law fits, predicted critical exponents, crossover detection.

The predicted-exponent tables cover the four bath scenarios; entries that
are not plain power laws are encoded as the string markers
``"IR-divergent"`` and ``"exp-decay"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericsError, ValidationError
from .greens import ModelParams, Scenario, critical_coupling, lowfreq_coefficients
from .observables import QuadConfig, correlation_time, photon_number

__all__ = [
    "PowerLawFit",
    "ScenarioPrediction",
    "fit_power_law",
    "predicted_exponents",
    "power_law_intersection",
    "crossover_time",
    "finite_temperature_window_study",
    "IR_DIVERGENT",
    "EXP_DECAY",
]

IR_DIVERGENT = "IR-divergent"
EXP_DECAY = "exp-decay"


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares power law y = amplitude * x**exponent over a window."""

    exponent: float
    amplitude: float
    stderr: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def fit_power_law(points, window=None) -> PowerLawFit:
    """Ordinary least squares on (log x, log y).

    ``points`` is an iterable of (x, y) pairs; ``window`` restricts x to
    [lo, hi].  Requires at least 6 positive points inside the window.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be (x, y) pairs")
    if window is None:
        window = (float(pts[:, 0].min()), float(pts[:, 0].max()))
    lo, hi = window
    if not lo < hi:
        raise ValidationError("window must satisfy lo < hi")
    sel = (pts[:, 0] >= lo) & (pts[:, 0] <= hi)
    pts = pts[sel]
    if len(pts) < 6:
        raise ValidationError(f"need >= 6 points inside the window, have {len(pts)}")
    if np.any(pts <= 0.0):
        raise ValidationError("power-law fit needs strictly positive x and y")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    n = len(lx)
    design = np.column_stack([lx, np.ones(n)])
    coef, res, *_ = np.linalg.lstsq(design, ly, rcond=None)
    slope, intercept = coef
    fitted = design @ coef
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    var = ss_res / (n - 2) if n > 2 else 0.0
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = math.sqrt(var / sxx) if sxx > 0.0 else math.inf
    return PowerLawFit(
        exponent=float(slope),
        amplitude=float(math.exp(intercept)),
        stderr=stderr,
        r_squared=min(max(r2, 0.0), 1.0),
        window=(float(lo), float(hi)),
        n_points=n,
    )


@dataclass(frozen=True)
class ScenarioPrediction:
    """Closed-form exponents for one scenario at sub-ohmic exponent s.

    photon_flux      : nu,        <a^dag a> ~ dy^-nu
    corr_critical    : nu_t,      iG^K(t) ~ t^-nu_t at criticality
    corr_away        :            same, away from criticality
    resp_critical    : nu'_t,     iG^R(t) ~ t^-nu'_t at criticality
    resp_away        :            same, away from criticality
    finite_size      : alpha,     <a^dag a> ~ N^alpha at criticality
    crossover        : zeta_c,    t_c ~ dy^-zeta_c
    finite_size_time : zeta,      t_N ~ N^zeta
    """

    scenario: Scenario
    s: float
    photon_flux: float | str
    corr_critical: float | str
    corr_away: float | str
    resp_critical: float | str
    resp_away: float | str
    finite_size: float | str
    crossover: float | str
    finite_size_time: float | str


def predicted_exponents(scenario: Scenario, s: float) -> ScenarioPrediction:
    """Exponent table row for the scenario, piecewise in s where applicable."""
    if not 0.0 < s < 1.0:
        raise ValidationError(f"s must lie in (0, 1), got {s}")
    scenario = Scenario(scenario)
    if scenario is Scenario.BOTH_TZERO:
        return ScenarioPrediction(
            scenario, s,
            photon_flux=2.0 - 1.0 / s if s > 0.5 else 0.0,
            corr_critical=IR_DIVERGENT if s > 0.5 else 1.0 - 2.0 * s,
            corr_away=1.0 + s,
            resp_critical=1.0 - s,
            resp_away=1.0 + s,
            finite_size=(2.0 * s - 1.0) / (3.0 * s - 1.0) if s > 0.5 else 0.0,
            crossover=1.0 / s,
            finite_size_time=1.0 / (3.0 * s - 1.0) if s > 1.0 / 3.0 else 0.0,
        )
    if scenario is Scenario.BOTH_THERMAL:
        return ScenarioPrediction(
            scenario, s,
            photon_flux=1.0,
            corr_critical=IR_DIVERGENT,
            corr_away=s,
            resp_critical=1.0 - s,
            resp_away=1.0 + s,
            finite_size=0.5,
            crossover=1.0 / s,
            finite_size_time=1.0 / (2.0 * s),
        )
    if scenario is Scenario.MB_ONLY:
        return ScenarioPrediction(
            scenario, s,
            photon_flux=1.0,
            corr_critical=IR_DIVERGENT,
            corr_away=EXP_DECAY,
            resp_critical=IR_DIVERGENT,
            resp_away=EXP_DECAY,
            finite_size=0.5,
            crossover=1.0,
            finite_size_time=0.5,
        )
    return ScenarioPrediction(
        scenario, s,
        photon_flux=0.0,
        corr_critical=1.0 - s,
        corr_away=1.0 + s,
        resp_critical=1.0 - s,
        resp_away=1.0 + s,
        finite_size=0.0,
        crossover=1.0 / s,
        finite_size_time=1.0 / (2.0 * s - 1.0) if s > 0.5 else 0.0,
    )


def power_law_intersection(early: PowerLawFit, late: PowerLawFit) -> float:
    """Abscissa where two fitted power laws cross."""
    if abs(early.exponent - late.exponent) < 0.1:
        raise NumericsError(
            "no crossover resolved: early and late slopes differ by "
            f"{abs(early.exponent - late.exponent):.3f} < 0.1"
        )
    logt = (math.log(late.amplitude) - math.log(early.amplitude)) / (
        early.exponent - late.exponent
    )
    return math.exp(logt)


def _correlation_curve(p: ModelParams, window, per_decade, cfg):
    lo, hi = window
    n = max(6, int(round(per_decade * math.log10(hi / lo))) + 1)
    ts = np.geomspace(lo, hi, n)
    return [(t, correlation_time(t, p, cfg)) for t in ts]


def crossover_time(
    p: ModelParams,
    dy_rel: float,
    early_window: tuple[float, float] = (1e2, 1e4),
    late_window: tuple[float, float] | None = None,
    per_decade: float = 6.0,
    cfg: QuadConfig | None = None,
    min_r_squared: float = 0.99,
) -> float:
    """Time separating critical from off-critical decay of the correlator.

    The critical power law is fitted on ``early_window`` of the curve at
    criticality (it coincides with the off-critical curve for t << t_c but
    is free of crossover contamination); the off-critical law is fitted on
    ``late_window`` (default: two decades starting three decades past the
    analytic crossover estimate, where the asymptotic slope has set in).
    Returns the intersection abscissa of the two fitted lines.
    """
    if dy_rel <= 0.0:
        raise ValidationError("crossover requires dy_rel > 0")
    yc = critical_coupling(p)
    pev = replace(p, y=yc * (1.0 - dy_rel))
    if late_window is None:
        c = lowfreq_coefficients(pev)
        vt = math.hypot(c.v_I, c.v_R)
        t_est = (vt / c.r) ** (1.0 / p.bath.s) / p.omega_z
        late_window = (1e3 * t_est, 1e5 * t_est)
    pcrit = replace(p, y=yc)
    early = fit_power_law(_correlation_curve(pcrit, early_window, per_decade, cfg))
    late = fit_power_law(_correlation_curve(pev, late_window, per_decade, cfg))
    for which, fit in (("early", early), ("late", late)):
        if fit.r_squared < min_r_squared:
            raise NumericsError(
                f"{which} window {fit.window} does not show a clean power law "
                f"(r^2 = {fit.r_squared:.4f})"
            )
    return power_law_intersection(early, late)


def finite_temperature_window_study(
    p: ModelParams,
    windows,
    points_per_window: int = 7,
    cfg: QuadConfig | None = None,
) -> list[PowerLawFit]:
    """Photon-number fits over several distance-to-criticality windows.

    Probes how the apparent photon-flux exponent depends on the fit window at
    finite bath temperature: far windows see the thermally boosted noise,
    windows below the chemical-potential scale recover the zero-temperature
    exponent.  Each returned fit has n ~ dy^exponent, so the measured
    photon-flux exponent is -fit.exponent.
    """
    if p.bath.T_b <= 0.0:
        raise ValidationError("window study requires T_b > 0")
    yc = critical_coupling(p)
    fits = []
    for lo, hi in windows:
        dys = np.geomspace(lo, hi, points_per_window)
        pts = []
        for dy in dys:
            pv = replace(p, y=yc * (1.0 - dy))
            pts.append((dy, photon_number(pv, cfg)))
        fits.append(fit_power_law(pts, window=(lo, hi)))
    return fits

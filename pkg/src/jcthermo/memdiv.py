"""Memory-effect classification and map-level entropy production.

Positivity-divisibility of the reduced dynamics is decided instant by
instant from the generator rates.  Two minimised quantities connect it to
entropy production: ``sigma_fp_min`` (minimum of the fixed-point rate over
all initial states, each propagated through the exact joint dynamics) and
``sigma_map`` (the same functional minimised over the whole Bloch ball,
a property of the instantaneous generator alone).  The sign of the latter
matches P-divisibility exactly; the analytic classifier decides that sign
without rim-truncation artifacts.

A zero dead band (``sign_band``) keeps floating point honest at criterion
boundaries: sign claims inside the band are reported as inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .jcdyn import JointDynamics, ModelParams, NumericsConfig, ReducedMapPoint, resolve_cutoff
from .rates import (
    FixedPoint,
    RateSet,
    SingularRateError,
    rate_set_series,
    thermal_fixed_point,
)

RIM_DELTA = 1e-6       # Bloch-ball radius cap for the sigma_map grid
RIM_EPS = 1e-9         # evolved states this close to the rim use the sentinel rule
SIGN_NEGATIVE = "negative"
SIGN_ZERO_BAND = "zero-band"
SIGN_POSITIVE = "positive"


def _require_regular(rs: RateSet):
    if rs.singular:
        raise SingularRateError(f"rates singular at t = {rs.t}")


def p_criterion_big_gamma(rs: RateSet, variant: str = "standard") -> float:
    """Transverse rate entering the P-divisibility criterion.

    ``standard`` is gamma_3 + (gamma_1 + gamma_2)/2, consistent with the
    Bloch equations and the contractivity criteria; ``alt_gamma2`` is the
    gamma_3 + gamma_2/2 variant kept for comparison.
    """
    if variant == "standard":
        return rs.big_gamma
    if variant == "alt_gamma2":
        return rs.gamma3 + 0.5 * rs.gamma2
    raise ValueError(f"unknown P-criterion variant {variant!r}")


def cp_divisible(rs: RateSet, eps: float = 1e-9) -> bool:
    """All three decay rates non-negative (within the dead band)."""
    _require_regular(rs)
    return rs.gamma1 >= -eps and rs.gamma2 >= -eps and rs.gamma3 >= -eps


def p_margin(rs: RateSet, variant: str = "standard") -> float:
    """Signed margin of the P-divisibility criterion (>= 0 means P-divisible).

    The criterion is |gamma_-| <= gamma_+ together with: either
    2 Gamma > gamma_+, or gamma_-^2 <= 4 Gamma (gamma_+ - Gamma).
    """
    _require_regular(rs)
    gp, gm = rs.gamma_plus, rs.gamma_minus
    big = p_criterion_big_gamma(rs, variant)
    c1 = gp - abs(gm)
    c2 = max(2.0 * big - gp, 4.0 * big * (gp - big) - gm * gm)
    return min(c1, c2)


def p_divisible(rs: RateSet, eps: float = 1e-9, variant: str = "standard") -> bool:
    """Intermediate maps positive; boundary equalities count as divisible."""
    return p_margin(rs, variant) >= -eps


def blp_contractive(rs: RateSet, eps: float = 1e-9) -> bool:
    """No information backflow: gamma_+ >= 0 and Gamma >= 0."""
    _require_regular(rs)
    return rs.gamma_plus >= -eps and rs.big_gamma >= -eps


# -- fixed-point entropy production over the Bloch ball -------------------


def sigma_fp_bloch(ell, z, dell, dz, z_fp: float):
    """sigma_fp = -r' L(r) + z' L(z_fp) from Bloch data; broadcasts.

    The rim rule: at r >= 1 - RIM_EPS the logarithm diverges and the value
    is 0 when r' vanishes there, +-inf otherwise.
    """
    ell = np.asarray(ell, dtype=float)
    z = np.asarray(z, dtype=float)
    dell = np.asarray(dell, dtype=float)
    dz = np.asarray(dz, dtype=float)
    r = np.hypot(ell, z)
    r_safe = np.where(r > 1e-15, r, 1.0)
    rdot = (ell * dell + z * dz) / r_safe
    with np.errstate(divide="ignore", invalid="ignore"):
        l_r = np.arctanh(np.clip(r, 0.0, 1.0 - 1e-16))
        l_z = math.atanh(z_fp) if abs(z_fp) < 1.0 else math.copysign(math.inf, z_fp)
        out = -rdot * l_r + dz * l_z
    rim = r >= 1.0 - RIM_EPS
    if np.any(rim):
        flat = np.abs(rdot) <= 1e-12
        out = np.where(rim & flat, dz * l_z, out)
        out = np.where(rim & ~flat, np.where(rdot > 0, -math.inf, math.inf), out)
    return out


def _half_disc_grid(n: int):
    """Polar grid of the half disc ell >= 0: radii x polar angles."""
    radii = np.linspace(0.0, 1.0, n)
    theta = np.linspace(0.0, math.pi, n)
    return radii, theta


def _sigma_fp_over_states(mp: ReducedMapPoint, z_fp: float,
                          radii: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """sigma_fp at time t for every initial state (rho0, theta) of the grid."""
    ell0 = np.outer(radii, np.sin(theta))
    z0 = np.outer(radii, np.cos(theta))
    ell = mp.ell_scale * ell0
    z = mp.z_scale * z0 + mp.z_offset
    dell = mp.dell_scale * ell0
    dz = mp.dz_scale * z0 + mp.dz_offset
    return sigma_fp_bloch(ell, z, dell, dz, z_fp)


def sigma_fp_min_from_map(mp: ReducedMapPoint, z_fp: float, n_grid: int) -> float:
    """Minimum of sigma_fp over initial states, with one refinement pass
    around the coarse minimiser."""
    radii, theta = _half_disc_grid(n_grid)
    vals = _sigma_fp_over_states(mp, z_fp, radii, theta)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    best = float(vals[i, j])
    lo_r = radii[max(i - 1, 0)]
    hi_r = radii[min(i + 1, len(radii) - 1)]
    lo_t = theta[max(j - 1, 0)]
    hi_t = theta[min(j + 1, len(theta) - 1)]
    fine = _sigma_fp_over_states(mp, z_fp, np.linspace(lo_r, hi_r, n_grid),
                                 np.linspace(lo_t, hi_t, n_grid))
    return min(best, float(fine.min()))


def sigma_fp_min(t: float, params: ModelParams, cfg: NumericsConfig) -> float:
    """Minimum of sigma_fp(t) over all initial qubit states.

    States are propagated through the exact joint dynamics (via the
    measured reduced map, which linearity makes equivalent), independent of
    the rate formulas; only the constant thermal fixed point enters the
    functional.  Phase covariance reduces the search to the half disc.
    """
    cutoff = resolve_cutoff(params, cfg)
    dyn = JointDynamics(params, cutoff, cfg.tail_tol)
    fp = thermal_fixed_point(params)
    return sigma_fp_min_from_map(dyn.map_point(t), fp.z, cfg.state_grid)


# -- map entropy production ------------------------------------------------


def _g_tilde(r, x, gamma_plus: float, big_gamma: float, z_fp: float):
    """Fixed-point rate functional over the whole ball in (r, X = cos theta)."""
    r = np.asarray(r, dtype=float)
    x = np.asarray(x, dtype=float)
    l_r = np.arctanh(np.clip(r, 0.0, 1.0 - 1e-16))
    l_z = math.atanh(z_fp) if abs(z_fp) < 1.0 else math.copysign(math.inf, z_fp)
    return (big_gamma * r * l_r * (1.0 - x * x)
            - gamma_plus * (r * x - z_fp) * (l_z - x * l_r))


def _map_r_grid(z_fp: float, n_coarse: int = 240, n_rim: int = 80) -> np.ndarray:
    rim = 1.0 - np.geomspace(0.01, RIM_DELTA, n_rim)
    grid = np.concatenate([np.linspace(0.0, 0.99, n_coarse), rim, [abs(z_fp)]])
    grid.sort()
    return grid


def _rim_asymptote(gamma_plus: float, big_gamma: float, z_abs: float) -> float:
    """Coefficient of L(r) in the r -> 1 limit of the interior X-minimum.

    Defined when the quadratic is convex with its extremum staying inside
    X in (-1, 1) as r -> 1; nan otherwise.  A negative value means the true
    minimum diverges to -inf at the rim.
    """
    if gamma_plus - big_gamma <= 1e-300:
        return math.nan
    x0_limit = gamma_plus * z_abs / (2.0 * (gamma_plus - big_gamma))
    if x0_limit >= 1.0 - 1e-12:
        return math.nan
    return big_gamma - gamma_plus ** 2 * z_abs ** 2 / (4.0 * (gamma_plus - big_gamma))


def sigma_map_grid(rs: RateSet, fp: FixedPoint, cfg: NumericsConfig,
                   n_x: int = 241) -> float:
    """Brute 2-d minimisation of the extended functional over the Bloch ball.

    The radius is capped at 1 - RIM_DELTA and two local refinement passes
    sharpen the sampled minimum.  When the rim asymptote shows the true
    minimum diverging as r -> 1 (it then sits beyond any radius cap), the
    result is -inf; the delimited output carries that as a sentinel.
    """
    _require_regular(rs)
    z_fp = fp.z
    asym = _rim_asymptote(rs.gamma_plus, rs.big_gamma, abs(z_fp))
    if not math.isnan(asym) and asym < -cfg.sign_band:
        return -math.inf
    r_grid = _map_r_grid(z_fp)
    x_grid = np.linspace(-1.0, 1.0, n_x)
    vals = _g_tilde(r_grid[:, None], x_grid[None, :], rs.gamma_plus, rs.big_gamma, z_fp)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    best = float(vals[i, j])
    for _ in range(2):
        lo_r, hi_r = r_grid[max(i - 1, 0)], min(r_grid[min(i + 1, len(r_grid) - 1)], 1.0 - RIM_DELTA)
        lo_x, hi_x = x_grid[max(j - 1, 0)], x_grid[min(j + 1, len(x_grid) - 1)]
        r_grid = np.linspace(lo_r, hi_r, 81)
        x_grid = np.linspace(lo_x, hi_x, 81)
        vals = _g_tilde(r_grid[:, None], x_grid[None, :], rs.gamma_plus, rs.big_gamma, z_fp)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        best = min(best, float(vals[i, j]))
    return best


@dataclass(frozen=True)
class MapSigmaAnalysis:
    """Closed-form data behind the analytic sign of sigma_map."""

    gamma_plus: float
    big_gamma: float
    z_mirrored: float
    r_grid: np.ndarray = field(repr=False)
    x0: np.ndarray = field(repr=False)          # quadratic extremum per radius (nan if none)
    g_min1: np.ndarray = field(repr=False)      # value at X = -1
    g_plus1: np.ndarray = field(repr=False)     # value at X = +1
    g_x0: np.ndarray = field(repr=False)        # value at the interior extremum
    min_location: tuple[float, float] = (math.nan, math.nan)
    boundary_asymptote_sign: float = math.nan   # Gamma - gamma_+^2 z^2 / (4 (gamma_+ - Gamma))
    minimum: float = math.nan


def _analyze_map_sigma(rs: RateSet) -> MapSigmaAnalysis:
    """Scan radii with the per-radius exact X-minimum of the quadratic.

    The fixed-point z is mirrored to z >= 0 first (the functional is
    invariant under (z, X) -> (-z, -X)), which orients the closed-form
    branch analysis.
    """
    gp, gm, big = rs.gamma_plus, rs.gamma_minus, rs.big_gamma
    z = min(abs(gm) / gp, 1.0 - 1e-15) if gp > 1e-300 else 0.0
    l_z = math.atanh(z)
    r = np.concatenate([np.linspace(0.0, 0.99, 400),
                        1.0 - np.geomspace(0.01, 1e-9, 200), [z]])
    r.sort()
    l_r = np.arctanh(np.clip(r, 0.0, 1.0 - 1e-16))
    a = r * l_r * (gp - big)
    b = -gp * (r * l_z + z * l_r)
    c = big * r * l_r + gp * z * l_z
    g_min1 = a - b + c
    g_plus1 = a + b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        x0 = np.where(np.abs(a) > 1e-300, -b / (2.0 * a), np.nan)
        g_x0 = np.where((a > 0.0) & (np.abs(x0) < 1.0), c - b * b / (4.0 * a), np.nan)
    candidates = np.vstack([g_min1, g_plus1, np.where(np.isnan(g_x0), np.inf, g_x0)])
    per_r = candidates.min(axis=0)
    k = int(np.argmin(per_r))
    which = int(np.argmin(candidates[:, k]))
    x_at_min = (-1.0, 1.0, float(x0[k]) if not np.isnan(x0[k]) else math.nan)[which]
    asym = _rim_asymptote(gp, big, z)
    return MapSigmaAnalysis(
        gamma_plus=gp, big_gamma=big, z_mirrored=z, r_grid=r, x0=x0,
        g_min1=g_min1, g_plus1=g_plus1, g_x0=g_x0,
        min_location=(float(r[k]), x_at_min),
        boundary_asymptote_sign=asym, minimum=float(per_r[k]))


def sigma_map_sign_analytic(rs: RateSet, eps: float = 1e-9) -> str:
    """Sign of sigma_map without rim-truncation artifacts.

    Negative rates settle the sign through specific trajectories (z axis
    for gamma_+, the z = z_inf plane for Gamma); a fixed point outside the
    ball forces rim escape.  Otherwise the quadratic minimum is scanned in
    closed form over the radius, and the r -> 1 asymptote decides whether
    the minimum diverges to -inf at the rim.
    """
    _require_regular(rs)
    gp, gm, big = rs.gamma_plus, rs.gamma_minus, rs.big_gamma
    if gp < -eps or big < -eps:
        return SIGN_NEGATIVE
    if abs(gm) > max(gp, 0.0) + eps:
        return SIGN_NEGATIVE
    analysis = _analyze_map_sigma(rs)
    m = analysis.minimum
    if not math.isnan(analysis.boundary_asymptote_sign) and analysis.boundary_asymptote_sign < -eps:
        return SIGN_NEGATIVE
    if m < -eps:
        return SIGN_NEGATIVE
    if m > eps:
        return SIGN_POSITIVE
    return SIGN_ZERO_BAND


def map_sigma_analysis(rs: RateSet) -> MapSigmaAnalysis:
    """Expose the closed-form scan for tests and debugging."""
    _require_regular(rs)
    return _analyze_map_sigma(rs)


# -- theorem check and run-level classification ----------------------------


@dataclass(frozen=True)
class TheoremMismatch:
    t: float
    gamma1: float
    gamma2: float
    gamma3: float
    p_div: bool
    sign: str


@dataclass(frozen=True)
class TheoremReport:
    n_checked: int
    n_singular: int
    n_zero_band: int
    mismatches: list[TheoremMismatch]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def theorem1_check(rate_sets, eps: float = 1e-9, variant: str = "standard") -> TheoremReport:
    """P-divisibility versus the sign of the map entropy production.

    For every regular rate set whose sign claim falls outside the dead
    band, P-divisibility must hold exactly when the sign is not negative.
    The report lists every counterexample with its full rate context.
    """
    checked = singular = band = 0
    mismatches: list[TheoremMismatch] = []
    for rs in rate_sets:
        if rs.singular:
            singular += 1
            continue
        sign = sigma_map_sign_analytic(rs, eps)
        if sign == SIGN_ZERO_BAND:
            band += 1
            continue
        checked += 1
        pd = p_divisible(rs, eps, variant)
        if pd != (sign == SIGN_POSITIVE):
            mismatches.append(TheoremMismatch(
                t=rs.t, gamma1=rs.gamma1, gamma2=rs.gamma2, gamma3=rs.gamma3,
                p_div=pd, sign=sign))
    return TheoremReport(n_checked=checked, n_singular=singular,
                         n_zero_band=band, mismatches=mismatches)


@dataclass(frozen=True)
class DivisibilityVerdict:
    """Per-time memory-effect classification."""

    t: float
    gt: float
    cp_div: bool | None
    p_div: bool | None
    blp: bool | None
    sigma_min: float
    sigma_map: float
    sigma_map_sign: str
    masked: bool


@dataclass(frozen=True)
class DivisibilityRun:
    t_grid: np.ndarray
    verdicts: list[DivisibilityVerdict]
    rate_sets: list[RateSet]


def divisibility_series(params: ModelParams, cfg: NumericsConfig,
                        t_grid=None, with_sigma_min: bool = True) -> DivisibilityRun:
    """Classify every grid time and attach the two minimised rates."""
    t_grid = cfg.time_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    cutoff = resolve_cutoff(params, cfg)
    dyn = JointDynamics(params, cutoff, cfg.tail_tol)
    fp = thermal_fixed_point(params)
    rate_sets = rate_set_series(t_grid, params, cutoff)
    verdicts = []
    for i, rs in enumerate(rate_sets):
        t = float(t_grid[i])
        if rs.singular:
            verdicts.append(DivisibilityVerdict(
                t=t, gt=params.g * t, cp_div=None, p_div=None, blp=None,
                sigma_min=math.nan, sigma_map=math.nan,
                sigma_map_sign=SIGN_ZERO_BAND, masked=True))
            continue
        smin = (sigma_fp_min_from_map(dyn.map_point(t), fp.z, cfg.state_grid)
                if with_sigma_min else math.nan)
        smap = sigma_map_grid(rs, fp, cfg)
        verdicts.append(DivisibilityVerdict(
            t=t, gt=params.g * t,
            cp_div=cp_divisible(rs, cfg.sign_band),
            p_div=p_divisible(rs, cfg.sign_band, cfg.p_criterion_variant),
            blp=blp_contractive(rs, cfg.sign_band),
            sigma_min=smin, sigma_map=smap,
            sigma_map_sign=sigma_map_sign_analytic(rs, cfg.sign_band),
            masked=False))
    return DivisibilityRun(t_grid=t_grid, verdicts=verdicts, rate_sets=rate_sets)


def constant_verdict_intervals(run: DivisibilityRun, attr: str = "p_div") -> list[tuple[float, float, bool]]:
    """Maximal unmasked intervals of constant verdict, in gt units."""
    out: list[tuple[float, float, bool]] = []
    current: bool | None = None
    start = None
    last = None
    for v in run.verdicts:
        flag = getattr(v, attr)
        if v.masked or flag is None:
            continue
        if current is None or flag != current:
            if current is not None:
                out.append((start, last, current))
            current, start = flag, v.gt
        last = v.gt
    if current is not None:
        out.append((start, last, current))
    return out

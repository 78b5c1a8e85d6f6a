"""Closed-form master-equation coefficients and the reduced-state integrator.

The reduced qubit dynamics admits an exact time-local master equation whose
rates follow from three Boltzmann-weighted series alpha(t), beta(t) (real)
and gamma(t) (complex) over the doublet frequencies Omega_n.  This module
evaluates the series and their analytic time derivatives, derives the
instantaneous rates (gamma_1, gamma_2, gamma_3) and Hamiltonian shift
Omega_A(t), and integrates the master equation with an adaptive
Runge-Kutta scheme that bridges the isolated instants where the rate
formulas are singular.

All reduced states live in the interaction picture of the joint
propagator (see :mod:`.jcdyn`), so the integrator applies the Hamiltonian
commutator with coefficient Omega_A(t) - omega_A.  The reported
``omega_shift`` is the untranslated Omega_A(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .jcdyn import ConfigError, ModelParams, NumericsConfig, resolve_cutoff
from .qstate import DensityMatrix, PROJ_EXCITED, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z

SINGULAR_DENOM_TOL = 1e-10   # |alpha + beta - 1| below this flags the rates singular
SINGULAR_GAMMA_TOL = 1e-12   # |gamma(t)| below this flags the rates singular
BRIDGE_DENOM_TOL = 1e-5      # integrator detours around |alpha + beta - 1| < this
BRIDGE_GAMMA_TOL = 1e-9


class SingularRateError(RuntimeError):
    """The instantaneous generator is not defined at this time."""


class StepSizeUnderflowError(RuntimeError):
    """The adaptive integrator failed to advance."""


@dataclass(frozen=True)
class CoefficientSet:
    """Series values and analytic derivatives at one time."""

    t: float
    alpha: float
    beta_fn: float
    gamma_c: complex
    dalpha: float
    dbeta_fn: float
    dgamma_c: complex


@dataclass(frozen=True)
class RateSet:
    """Instantaneous generator data: Hamiltonian shift and decay rates."""

    t: float
    omega_shift: float
    gamma1: float
    gamma2: float
    gamma3: float
    singular: bool = False

    @property
    def gamma_plus(self) -> float:
        return self.gamma1 + self.gamma2

    @property
    def gamma_minus(self) -> float:
        return self.gamma1 - self.gamma2

    @property
    def big_gamma(self) -> float:
        """Transverse decay rate gamma_3 + (gamma_1 + gamma_2)/2."""
        return self.gamma3 + 0.5 * self.gamma_plus

    @property
    def z_inf(self) -> float:
        gp = self.gamma_plus
        if abs(gp) < 1e-300:
            return math.nan
        return self.gamma_minus / gp


@dataclass(frozen=True)
class FixedPoint:
    """Diagonal instantaneous fixed point of the generator."""

    p1_fp: float

    def __post_init__(self):
        if not (0.0 <= self.p1_fp <= 1.0) or not math.isfinite(self.p1_fp):
            raise SingularRateError(f"fixed-point population {self.p1_fp!r} outside [0, 1]")

    @property
    def z(self) -> float:
        return 2.0 * self.p1_fp - 1.0

    @property
    def log_ratio(self) -> float:
        """ln(p1/p0); -inf for a pure ground state."""
        if self.p1_fp <= 0.0:
            return -math.inf
        if self.p1_fp >= 1.0:
            return math.inf
        return math.log(self.p1_fp / (1.0 - self.p1_fp))

    def as_density(self) -> DensityMatrix:
        return DensityMatrix(np.diag([self.p1_fp + 0j, 1.0 - self.p1_fp]))


def omega_n(n: int, params: ModelParams) -> float:
    """Doublet frequency sqrt(delta^2 + 4 g^2 n)."""
    if n < 0:
        raise ConfigError("n must be non-negative")
    return math.sqrt(params.delta ** 2 + 4.0 * params.g ** 2 * n)


def _bath_weights(params: ModelParams, cutoff: int) -> np.ndarray:
    x = params.beta_b * params.omega_b
    q = np.exp(-x * np.arange(cutoff))
    return q / q.sum()


def _series_terms(ts: np.ndarray, params: ModelParams, cutoff: int):
    """A_n(t) and dA_n/dt for n = 0..cutoff over a 1-d array of times."""
    n = np.arange(cutoff + 1)
    om = np.sqrt(params.delta ** 2 + 4.0 * params.g ** 2 * n)   # (n,)
    half = 0.5 * om[:, None] * ts[None, :]                      # (n, T)
    om_safe = np.where(om > 0.0, om, 1.0)
    sin_half = np.sin(half)
    cos_half = np.cos(half)
    # sin(Om t/2)/Om -> t/2 in the Om -> 0 limit (n = 0 on resonance)
    s = np.where((om > 0.0)[:, None], sin_half / om_safe[:, None], 0.5 * ts[None, :])
    a = cos_half - 1j * params.delta * s
    da = -0.5 * om[:, None] * sin_half - 0.5j * params.delta * cos_half
    return a, da


def coefficient_series(ts, params: ModelParams, cutoff: int):
    """Vectorised evaluation of (alpha, beta, gamma, dalpha, dbeta, dgamma).

    Returns six arrays over the time axis.  ``cutoff`` is the number of
    bath levels; the series run over the same truncated, renormalised
    Boltzmann weights as the joint dynamics so the two routes describe the
    same truncated model.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    q = _bath_weights(params, cutoff)[:, None]
    a, da = _series_terms(ts, params, cutoff)
    a_lo, a_hi = a[:cutoff], a[1:]
    da_lo, da_hi = da[:cutoff], da[1:]
    alpha = np.sum(q * np.abs(a_lo) ** 2, axis=0)
    beta = np.sum(q * np.abs(a_hi) ** 2, axis=0)
    pair = np.sum(q * a_lo * a_hi, axis=0)
    rot = np.exp(-1j * params.omega_b * ts)
    gamma = rot * pair
    # analytic derivative of each product term (product rule; the e^{-i w t}
    # prefactor differentiates to -i w)
    dalpha = np.sum(q * 2.0 * (np.conj(a_lo) * da_lo).real, axis=0)
    dbeta = np.sum(q * 2.0 * (np.conj(a_hi) * da_hi).real, axis=0)
    dgamma = rot * (-1j * params.omega_b * pair
                    + np.sum(q * (da_lo * a_hi + a_lo * da_hi), axis=0))
    return alpha, beta, gamma, dalpha, dbeta, dgamma


def coefficients(t: float, params: ModelParams, cutoff: int) -> CoefficientSet:
    """Series values and analytic derivatives at a single time."""
    al, be, ga, dal, dbe, dga = coefficient_series([float(t)], params, cutoff)
    return CoefficientSet(t=float(t), alpha=float(al[0]), beta_fn=float(be[0]),
                          gamma_c=complex(ga[0]), dalpha=float(dal[0]),
                          dbeta_fn=float(dbe[0]), dgamma_c=complex(dga[0]))


def rate_set_from_coefficients(cs: CoefficientSet) -> RateSet:
    denom = cs.alpha + cs.beta_fn - 1.0
    if abs(denom) < SINGULAR_DENOM_TOL or abs(cs.gamma_c) < SINGULAR_GAMMA_TOL:
        return RateSet(t=cs.t, omega_shift=math.nan, gamma1=math.nan,
                       gamma2=math.nan, gamma3=math.nan, singular=True)
    g1 = (cs.alpha * cs.dbeta_fn - cs.dalpha * cs.beta_fn - cs.dbeta_fn) / denom
    g2 = (cs.dalpha * cs.beta_fn - cs.alpha * cs.dbeta_fn - cs.dalpha) / denom
    ratio = cs.dgamma_c / cs.gamma_c
    g3 = -0.5 * (g1 + g2 + 2.0 * ratio.real)
    return RateSet(t=cs.t, omega_shift=float(-ratio.imag),
                   gamma1=float(g1), gamma2=float(g2), gamma3=float(g3))


def rate_set(t: float, params: ModelParams, cutoff: int) -> RateSet:
    """Instantaneous rates at time t (``singular`` flag instead of failure)."""
    return rate_set_from_coefficients(coefficients(t, params, cutoff))


def rate_set_series(ts: np.ndarray, params: ModelParams, cutoff: int) -> list[RateSet]:
    """Rates on a time grid, sharing one vectorised coefficient sweep."""
    al, be, ga, dal, dbe, dga = coefficient_series(np.asarray(ts, dtype=float), params, cutoff)
    out = []
    for i, t in enumerate(np.asarray(ts, dtype=float)):
        out.append(rate_set_from_coefficients(CoefficientSet(
            t=float(t), alpha=float(al[i]), beta_fn=float(be[i]), gamma_c=complex(ga[i]),
            dalpha=float(dal[i]), dbeta_fn=float(dbe[i]), dgamma_c=complex(dga[i]))))
    return out


def fixed_point(rs: RateSet, params: ModelParams) -> FixedPoint:
    """Instantaneous fixed point p1 = gamma_1 / (gamma_1 + gamma_2).

    Raises :class:`SingularRateError` when the rates are singular or the
    total rate vanishes; callers fall back to the constant thermal value
    :func:`thermal_fixed_point`.
    """
    if rs.singular:
        raise SingularRateError(f"rates singular at t = {rs.t}")
    gp = rs.gamma_plus
    if abs(gp) < 1e-12 or not math.isfinite(gp):
        raise SingularRateError(f"gamma_1 + gamma_2 = {gp!r} at t = {rs.t}")
    p1 = rs.gamma1 / gp
    if not math.isfinite(p1) or not (0.0 <= p1 <= 1.0):
        raise SingularRateError(f"fixed-point population {p1!r} at t = {rs.t}")
    return FixedPoint(p1_fp=p1)


def thermal_fixed_point(params: ModelParams) -> FixedPoint:
    """Constant fixed point for an initially thermal bath: the qubit Gibbs
    state at the rescaled inverse temperature (omega_b/omega_a) beta_b."""
    return FixedPoint(p1_fp=1.0 / (1.0 + math.exp(params.beta_b * params.omega_b)))


def generator_apply(rs: RateSet, rho, params: ModelParams | None = None,
                    *, interaction_frame: bool = True) -> np.ndarray:
    """Apply the instantaneous generator to a qubit state.

    With ``interaction_frame`` the commutator carries Omega_A(t) - omega_A,
    matching the frame of the joint propagator; the lab-frame generator
    uses the full Omega_A(t).  The dissipative part is identical in both.
    """
    if rs.singular:
        raise SingularRateError(f"rates singular at t = {rs.t}")
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    shift = rs.omega_shift
    if interaction_frame:
        if params is None:
            raise ConfigError("interaction_frame=True requires params for omega_a")
        shift = rs.omega_shift - params.omega_a
    out = -1j * shift * (PROJ_EXCITED @ m - m @ PROJ_EXCITED)
    out += rs.gamma1 * (SIGMA_PLUS @ m @ SIGMA_MINUS
                        - 0.5 * (SIGMA_MINUS @ SIGMA_PLUS @ m + m @ SIGMA_MINUS @ SIGMA_PLUS))
    out += rs.gamma2 * (SIGMA_MINUS @ m @ SIGMA_PLUS
                        - 0.5 * (SIGMA_PLUS @ SIGMA_MINUS @ m + m @ SIGMA_PLUS @ SIGMA_MINUS))
    out += 0.5 * rs.gamma3 * (SIGMA_Z @ m @ SIGMA_Z - m)
    return out


def analytic_reduced_state(rho_a0, params: ModelParams, cutoff: int, t: float) -> np.ndarray:
    """Exact reduced state at time t (interaction picture), from the series.

    Populations follow p1(t) = (alpha+beta-1) p1(0) + 1 - alpha; the
    coherence is e^{i omega_a t} gamma(t) c(0).  Both are regular even at
    the isolated instants where the rate formulas blow up, which is what
    makes this the bridge for the integrator.
    """
    m0 = rho_a0.mat if isinstance(rho_a0, DensityMatrix) else np.asarray(rho_a0, dtype=complex)
    cs = coefficients(t, params, cutoff)
    p1 = (cs.alpha + cs.beta_fn - 1.0) * m0[0, 0].real + 1.0 - cs.alpha
    c = np.exp(1j * params.omega_a * t) * cs.gamma_c * m0[0, 1]
    return np.array([[p1, c], [np.conj(c), 1.0 - p1]], dtype=complex)


def singular_windows(params: ModelParams, cutoff: int, t_max: float,
                     denom_tol: float = BRIDGE_DENOM_TOL,
                     gamma_tol: float = BRIDGE_GAMMA_TOL,
                     scan_points_per_unit: float = 40.0) -> list[tuple[float, float]]:
    """Time windows where the rate formulas are near-singular.

    Scans alpha + beta - 1 (sign changes and near-zero minima) and |gamma|
    on a grid finer than the fastest relevantly-weighted doublet frequency,
    then refines each hit with a root/minimum bracket.  Windows are the
    intervals the integrator detours around via the analytic solution.
    """
    if t_max <= 0.0:
        return []
    n_scan = max(int(scan_points_per_unit * t_max), 200)
    n_scan = min(n_scan, 400_000)
    windows: list[tuple[float, float]] = []
    chunk = 4000
    ts = np.linspace(0.0, t_max, n_scan + 1)

    def denom_at(t):
        cs = coefficients(float(t), params, cutoff)
        return cs.alpha + cs.beta_fn - 1.0

    dvals = np.empty_like(ts)
    gvals = np.empty_like(ts)
    for i in range(0, ts.size, chunk):
        al, be, ga, *_ = coefficient_series(ts[i:i + chunk], params, cutoff)
        dvals[i:i + chunk] = al + be - 1.0
        gvals[i:i + chunk] = np.abs(ga)

    def add_window(t_star: float, slope: float, tol: float):
        w = tol / max(abs(slope), 1e-8)
        windows.append((max(t_star - 1.5 * w, 0.0), min(t_star + 1.5 * w, t_max)))

    # sign changes of the denominator
    sgn = np.sign(dvals)
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        t_star = brentq(denom_at, ts[i], ts[i + 1], xtol=1e-12)
        h = ts[1] - ts[0]
        slope = (denom_at(min(t_star + 0.5 * h, t_max)) - denom_at(max(t_star - 0.5 * h, 0.0))) / h
        add_window(t_star, slope, denom_tol)
    # near-zero local minima of |denominator| without a sign change
    small = np.abs(dvals) < 10.0 * denom_tol
    for i in np.nonzero(small)[0]:
        if sgn[max(i - 1, 0)] * sgn[min(i + 1, len(sgn) - 1)] > 0:
            h = ts[1] - ts[0]
            slope = (dvals[min(i + 1, len(dvals) - 1)] - dvals[max(i - 1, 0)]) / (2 * h)
            add_window(ts[i], slope if slope else 1.0, denom_tol)
    # |gamma| dips (coherence zeros make the shift and gamma_3 blow up)
    for i in np.nonzero(gvals < 10.0 * gamma_tol)[0]:
        h = ts[1] - ts[0]
        windows.append((max(ts[i] - h, 0.0), min(ts[i] + h, t_max)))
    if not windows:
        return []
    windows.sort()
    merged = [windows[0]]
    for lo, hi in windows[1:]:
        if lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _me_rhs_factory(params: ModelParams, cutoff: int, n_states: int):
    """Right-hand side for stacked density matrices (n_states, 2, 2) -> flat."""

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rs = rate_set(t, params, cutoff)
        if rs.singular:
            raise SingularRateError(f"generator singular inside an integration segment (t={t})")
        rho = y.reshape(n_states, 2, 2)
        shift = rs.omega_shift - params.omega_a
        out = np.empty_like(rho)
        for k in range(n_states):
            m = rho[k]
            d = -1j * shift * (PROJ_EXCITED @ m - m @ PROJ_EXCITED)
            d += rs.gamma1 * (SIGMA_PLUS @ m @ SIGMA_MINUS
                              - 0.5 * (SIGMA_MINUS @ SIGMA_PLUS @ m + m @ SIGMA_MINUS @ SIGMA_PLUS))
            d += rs.gamma2 * (SIGMA_MINUS @ m @ SIGMA_PLUS
                              - 0.5 * (SIGMA_PLUS @ SIGMA_MINUS @ m + m @ SIGMA_PLUS @ SIGMA_MINUS))
            d += 0.5 * rs.gamma3 * (SIGMA_Z @ m @ SIGMA_Z - m)
            out[k] = d
        return out.reshape(-1)

    return rhs


def _integrate_stack(rhos0: np.ndarray, params: ModelParams, cfg: NumericsConfig,
                     t_grid: np.ndarray, cutoff: int) -> np.ndarray:
    """Integrate a stack of initial states over the grid, bridging singular windows."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0.0):
        raise ConfigError("the time grid must increase from 0")
    n_states = rhos0.shape[0]
    windows = singular_windows(params, cutoff, float(t_grid[-1]))
    rhs = _me_rhs_factory(params, cutoff, n_states)
    out = np.empty((t_grid.size, n_states, 2, 2), dtype=complex)
    out[0] = rhos0

    def analytic_stack(t: float) -> np.ndarray:
        return np.stack([analytic_reduced_state(rhos0[k], params, cutoff, t)
                         for k in range(n_states)])

    # segment boundaries: grid interval [0, t_max] minus the singular windows
    boundaries: list[tuple[float, float]] = []
    cursor = 0.0
    for lo, hi in windows:
        if lo > cursor:
            boundaries.append((cursor, min(lo, t_grid[-1])))
        cursor = max(cursor, hi)
        if cursor >= t_grid[-1]:
            break
    if cursor < t_grid[-1]:
        boundaries.append((cursor, t_grid[-1]))

    y = rhos0.reshape(-1).astype(complex)
    filled = np.zeros(t_grid.size, dtype=bool)
    filled[0] = True
    for (seg_lo, seg_hi) in boundaries:
        if seg_lo > 0.0:
            y = analytic_stack(seg_lo).reshape(-1)   # exact re-entry after a window
        mask = (t_grid > seg_lo) & (t_grid <= seg_hi) & ~filled
        t_eval = t_grid[mask]
        if t_eval.size == 0 and seg_hi - seg_lo < 1e-12:
            continue
        sol = solve_ivp(rhs, (seg_lo, seg_hi), y, method="DOP853",
                        rtol=cfg.ode_rtol, atol=cfg.ode_atol,
                        t_eval=t_eval if t_eval.size else None, dense_output=False)
        if not sol.success:
            raise StepSizeUnderflowError(f"integrator failed on [{seg_lo}, {seg_hi}]: {sol.message}")
        if t_eval.size:
            out[np.nonzero(mask)[0]] = sol.y.T.reshape(t_eval.size, n_states, 2, 2)
            filled[mask] = True
        y = sol.y[:, -1] if sol.y.shape[1] else y
    # grid points inside windows: the analytic solution is regular there
    for i in np.nonzero(~filled)[0]:
        out[i] = analytic_stack(t_grid[i])
    # enforce exact Hermiticity (the generator preserves it up to roundoff)
    out = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
    return out


def integrate_master_equation(rho_a0: DensityMatrix, params: ModelParams,
                              cfg: NumericsConfig, t_grid) -> list[DensityMatrix]:
    """Adaptive integration of the master equation on an increasing grid from 0.

    Rates are re-evaluated from the closed-form series at every substep;
    isolated singular instants are bridged with the analytic solution.
    Returns one validated state per grid time (interaction picture).
    """
    cutoff = resolve_cutoff(params, cfg)
    m0 = rho_a0.mat if isinstance(rho_a0, DensityMatrix) else np.asarray(rho_a0, dtype=complex)
    stack = _integrate_stack(m0[None, :, :], params, cfg, np.asarray(t_grid, dtype=float), cutoff)
    return [DensityMatrix(stack[i, 0]) for i in range(stack.shape[0])]


def integrate_master_equation_stack(rhos0: list[np.ndarray] | np.ndarray,
                                    params: ModelParams, cfg: NumericsConfig,
                                    t_grid) -> np.ndarray:
    """Batched variant sharing coefficient evaluations across initial states."""
    cutoff = resolve_cutoff(params, cfg)
    arr = np.stack([r.mat if isinstance(r, DensityMatrix) else np.asarray(r, dtype=complex)
                    for r in rhos0])
    return _integrate_stack(arr, params, cfg, np.asarray(t_grid, dtype=float), cutoff)


def bloch_velocity(rs: RateSet, x: float, y: float, z: float) -> tuple[float, float, float]:
    """Rotating-frame Bloch flow: (-G x, -G y, gamma_minus - gamma_plus z)."""
    if rs.singular:
        raise SingularRateError(f"rates singular at t = {rs.t}")
    return (-rs.big_gamma * x, -rs.big_gamma * y, rs.gamma_minus - rs.gamma_plus * z)

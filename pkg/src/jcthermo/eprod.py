"""The five competing entropy-production rates on a time grid.

Per grid time the pipeline combines three exact ingredients: the joint
state and its commutator-exact observable derivatives (:mod:`.jcdyn`),
the instantaneous generator acting on the reduced state (:mod:`.rates`),
and an effective bath temperature solved from the bath entropy.  Rows at
the isolated instants where the generator is singular are emitted masked
rather than filled with garbage; the joint-side columns (bath/coupling
energy flows, population rate) remain valid there and are kept.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .jcdyn import JointDynamics, ModelParams, NumericsConfig, neg_tr_rhodot_log, resolve_cutoff
from .qstate import DensityMatrix, _ptrace_bath_raw, _ptrace_system_raw, entropy_of_spectrum
from .rates import (
    FixedPoint,
    RateSet,
    SingularRateError,
    fixed_point,
    generator_apply,
    rate_set_series,
    thermal_fixed_point,
)

BETA_BRACKET_LO = 1e-6   # in units of 1/omega_b
BETA_BRACKET_HI = 1e3
BETA_RESIDUAL_TOL = 1e-10


class UnresolvableTemperatureError(RuntimeError):
    """No thermal state in the bracket matches the requested entropy."""


@dataclass(frozen=True)
class EntropySample:
    """One grid row: all entropy-production rates and the flows behind them."""

    t: float
    gt: float
    sigma_es: float
    sigma_el: float
    sigma_co: float
    sigma_fp: float
    di_ab: float
    sdot_a: float
    sdot_b: float
    edot_b: float
    edot_int: float
    pdot_a: float
    beta_b_eff: float
    masked: bool


def _truncated_thermal_entropy(beta: float, omega_b: float, dim: int) -> float:
    w = np.exp(-beta * omega_b * np.arange(dim))
    w /= w.sum()
    return entropy_of_spectrum(w)


def effective_bath_beta(rho_b, omega_b: float, cutoff: int | None = None) -> float:
    """Inverse temperature of the truncated Gibbs family with the same entropy.

    Thermal entropy decreases strictly in beta, so the root is bracketed on
    [1e-6, 1e3]/omega_b and found with Brent's method; the residual in
    entropy must come out below 1e-10 or the temperature is declared
    unresolvable (caller masks the row).
    """
    if isinstance(rho_b, DensityMatrix):
        dim = cutoff or rho_b.dim
        s_target = entropy_of_spectrum(rho_b.eigvals())
    else:
        m = np.asarray(rho_b, dtype=complex)
        dim = cutoff or m.shape[0]
        s_target = entropy_of_spectrum(np.linalg.eigvalsh(m))
    return effective_bath_beta_from_entropy(s_target, omega_b, dim)


def effective_bath_beta_from_entropy(s_target: float, omega_b: float, dim: int) -> float:
    lo = BETA_BRACKET_LO / omega_b
    hi = BETA_BRACKET_HI / omega_b
    s_lo = _truncated_thermal_entropy(lo, omega_b, dim)
    s_hi = _truncated_thermal_entropy(hi, omega_b, dim)
    # the entropy must sit strictly inside the bracket (zero-entropy and
    # maximally-mixed limits push beta onto a bracket edge and are flagged)
    if not (s_hi < s_target < s_lo):
        raise UnresolvableTemperatureError(
            f"bath entropy {s_target:.6e} outside the thermal bracket ({s_hi:.3e}, {s_lo:.3e})")
    beta = brentq(lambda b: _truncated_thermal_entropy(b, omega_b, dim) - s_target,
                  lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    residual = abs(_truncated_thermal_entropy(beta, omega_b, dim) - s_target)
    if residual > BETA_RESIDUAL_TOL:
        raise UnresolvableTemperatureError(
            f"entropy residual {residual:.3e} above {BETA_RESIDUAL_TOL:.0e}")
    return float(beta)


def sigma_es(sdot_a: float, edot_b: float, beta_b: float) -> float:
    """Entropy flow into an initially thermal bath: dS_A/dt + beta_B dE_B/dt."""
    return sdot_a + beta_b * edot_b


def sigma_el(sdot_a: float, sdot_b: float, beta_b: float, beta_b_eff: float) -> float:
    """Effective-temperature variant: the thermal-energy rate is taken along
    the Gibbs family, where dS = beta dE holds exactly, so
    dE_B^th/dt = (dS_B/dt) / beta_B(t)."""
    if not (beta_b_eff > 0.0):
        raise UnresolvableTemperatureError(f"effective beta {beta_b_eff!r} not positive")
    return sdot_a + (beta_b / beta_b_eff) * sdot_b


def sigma_co(rho_a, rhodot_a, rs: RateSet, params: ModelParams) -> float:
    """Rate referenced to the Gibbs state of the shifted Hamiltonian
    Omega_A(t) |1><1| at the initial bath temperature."""
    if rs.singular:
        raise SingularRateError(f"rates singular at t = {rs.t}")
    m = rho_a.mat if isinstance(rho_a, DensityMatrix) else np.asarray(rho_a, dtype=complex)
    d = np.asarray(rhodot_a, dtype=complex)
    core = neg_tr_rhodot_log(m, d)
    pdot = float(d[0, 0].real)
    return core - params.beta_b * rs.omega_shift * pdot


def sigma_fp(rho_a, rhodot_a, fp: FixedPoint) -> float:
    """Rate referenced to the instantaneous fixed point of the generator."""
    m = rho_a.mat if isinstance(rho_a, DensityMatrix) else np.asarray(rho_a, dtype=complex)
    d = np.asarray(rhodot_a, dtype=complex)
    core = neg_tr_rhodot_log(m, d)
    pdot = float(d[0, 0].real)
    if pdot == 0.0 and not math.isfinite(fp.log_ratio):
        return core
    return core + pdot * fp.log_ratio


def traditional_sigma(rho_a, rhodot_a, params: ModelParams) -> float:
    """Textbook weak-coupling rate dS_A/dt - beta_B dQ/dt with
    dQ/dt = Tr[rho_dot H_A]; kept as a reference diagnostic."""
    m = rho_a.mat if isinstance(rho_a, DensityMatrix) else np.asarray(rho_a, dtype=complex)
    d = np.asarray(rhodot_a, dtype=complex)
    return neg_tr_rhodot_log(m, d) - params.beta_b * params.omega_a * float(d[0, 0].real)


@dataclass(frozen=True)
class TraceRun:
    """Entropy rows plus the rate sets and fixed points behind them."""

    t_grid: np.ndarray
    samples: list[EntropySample]
    rate_sets: list[RateSet]
    fixed_points: list[FixedPoint]


def entropy_production_series(rho_a0: DensityMatrix, params: ModelParams,
                              cfg: NumericsConfig, t_grid=None,
                              threads: int = 1) -> TraceRun:
    """All entropy-production rates over the grid for one initial qubit state.

    Rows are independent given the shared precomputed machinery, so the
    grid can be chunked across threads; results are gathered in grid order
    and are bit-identical for any thread count.
    """
    t_grid = cfg.time_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    cutoff = resolve_cutoff(params, cfg)
    dyn = JointDynamics(params, cutoff, cfg.tail_tol)
    rate_sets = rate_set_series(t_grid, params, cutoff)
    fp_const = thermal_fixed_point(params)
    fps = []
    for rs in rate_sets:
        try:
            fps.append(fixed_point(rs, params))
        except SingularRateError:
            fps.append(fp_const)
    rho0 = rho_a0.mat if isinstance(rho_a0, DensityMatrix) else np.asarray(rho_a0, dtype=complex)

    def row(i: int) -> EntropySample:
        t = float(t_grid[i])
        rs = rate_sets[i]
        rho_ab = dyn.evolve_raw(rho0, t)
        rho_b = _ptrace_system_raw(rho_ab, cutoff)
        bath_eig = dyn.bath_spectrum(rho_b)
        inst = dyn.instantaneous_rates(rho_ab, t, bath_eig=bath_eig)
        s_b = entropy_of_spectrum(bath_eig[0])
        try:
            beta_eff = effective_bath_beta_from_entropy(s_b, params.omega_b, cutoff)
        except UnresolvableTemperatureError:
            beta_eff = math.nan
        if rs.singular:
            return EntropySample(
                t=t, gt=params.g * t, sigma_es=math.nan, sigma_el=math.nan,
                sigma_co=math.nan, sigma_fp=math.nan, di_ab=math.nan,
                sdot_a=math.nan, sdot_b=inst.sdot_b, edot_b=inst.edot_b,
                edot_int=inst.edot_int, pdot_a=inst.pdot_a,
                beta_b_eff=beta_eff, masked=True)
        rho_a = _ptrace_bath_raw(rho_ab, cutoff)
        rho_dot_a = generator_apply(rs, rho_a, params)
        sdot_a = neg_tr_rhodot_log(rho_a, rho_dot_a, cfg.eig_clamp)
        s_es = sigma_es(sdot_a, inst.edot_b, params.beta_b)
        s_el = (sigma_el(sdot_a, inst.sdot_b, params.beta_b, beta_eff)
                if math.isfinite(beta_eff) else math.nan)
        s_co = sigma_co(rho_a, rho_dot_a, rs, params)
        s_fp = sigma_fp(rho_a, rho_dot_a, fps[i])
        return EntropySample(
            t=t, gt=params.g * t, sigma_es=s_es, sigma_el=s_el, sigma_co=s_co,
            sigma_fp=s_fp, di_ab=sdot_a + inst.sdot_b, sdot_a=sdot_a,
            sdot_b=inst.sdot_b, edot_b=inst.edot_b, edot_int=inst.edot_int,
            pdot_a=inst.pdot_a, beta_b_eff=beta_eff, masked=False)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(row, range(t_grid.size)))
    else:
        samples = [row(i) for i in range(t_grid.size)]
    return TraceRun(t_grid=t_grid, samples=samples, rate_sets=rate_sets, fixed_points=fps)


def entropy_production_row(t: float, rho_a0: DensityMatrix, params: ModelParams,
                           cfg: NumericsConfig) -> EntropySample:
    """Single grid row; see :func:`entropy_production_series`."""
    return entropy_production_series(rho_a0, params, cfg, t_grid=np.array([float(t)])).samples[0]

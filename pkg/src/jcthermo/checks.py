"""Named verification checks: the theorem and identity suite.

Each check computes a measured quantity, compares it against its pinned
tolerance and returns a :class:`~.report.CheckResult`.  The CLI ``verify``
subcommand and the acceptance test-suite both run these same functions, so
there is a single source of truth for every tolerance.

A :class:`VerifyContext` lazily computes and caches the preset runs the
checks share (trace rows, divisibility rows, rate grids).
"""

from __future__ import annotations

import math
import time

import numpy as np

from .jcdyn import ConfigError, CutoffLeakageError, JointDynamics, auto_cutoff, resolve_cutoff
from .memdiv import (
    blp_contractive,
    cp_divisible,
    p_divisible,
    p_margin,
    theorem1_check,
)
from .rates import (
    RateSet,
    SingularRateError,
    fixed_point,
    integrate_master_equation_stack,
    rate_set_series,
    thermal_fixed_point,
)
from .report import CheckResult, RunReport, column, run_divisibility, run_trace
from .scenarios import Scenario, preset

FUZZ_SEED = 20260810
ORACLE_SEED = 1837


def random_qubit_states(n: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = v @ v.conj().T
        out.append(rho / rho.trace())
    return out


def random_rate_sets(n: int, seed: int) -> list[RateSet]:
    """Synthetic generators with a fixed fixed-point direction per sample:
    z_inf drawn in [0, 1), rates in [-1, 1] with gamma_1/gamma_2 locked to
    the ratio that z_inf implies."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        z_inf = rng.uniform(0.0, 0.999)
        gp = rng.uniform(-1.0, 1.0)
        g3 = rng.uniform(-1.0, 1.0)
        out.append(RateSet(t=float(i), omega_shift=0.0,
                           gamma1=0.5 * gp * (1.0 + z_inf),
                           gamma2=0.5 * gp * (1.0 - z_inf), gamma3=g3))
    return out


class VerifyContext:
    """Lazy cache of the preset runs shared across checks."""

    def __init__(self, threads: int = 1):
        self.threads = threads
        self._traces: dict[str, RunReport] = {}
        self._divs: dict[str, RunReport] = {}
        self._scenarios: dict[str, Scenario] = {}

    def scenario(self, name: str) -> Scenario:
        if name not in self._scenarios:
            self._scenarios[name] = preset(name)
        return self._scenarios[name]

    def trace(self, name: str) -> RunReport:
        if name not in self._traces:
            self._traces[name] = run_trace(self.scenario(name), threads=self.threads)
        return self._traces[name]

    def div(self, name: str) -> RunReport:
        # fig1 and fig3 share parameters and grid; one divisibility run serves both
        key = "fig3" if name == "fig1" else name
        if key not in self._divs:
            self._divs[key] = run_divisibility(self.scenario(key))
        return self._divs[key]

    def rate_sets(self, name: str) -> list[RateSet]:
        sc = self.scenario(name)
        cutoff = resolve_cutoff(sc.params, sc.cfg)
        return rate_set_series(sc.cfg.time_grid(), sc.params, cutoff)


# -- the acceptance criteria -------------------------------------------------


def check_me_vs_joint(ctx: VerifyContext, n_states: int = 20,
                      seed: int = ORACLE_SEED) -> CheckResult:
    """Criterion 1: master-equation route against the exact joint route.

    Twenty random initial qubit states, both presets, sup of the trace
    distance over gt in [0, 20]."""
    started = time.perf_counter()
    states = random_qubit_states(n_states, seed)
    stack0 = np.stack(states)
    worst = 0.0
    for name in ("fig1", "fig4"):
        sc = ctx.scenario(name)
        t_grid = np.linspace(0.0, 20.0 / sc.params.g, 801)
        me = integrate_master_equation_stack(states, sc.params, sc.cfg, t_grid)
        cutoff = resolve_cutoff(sc.params, sc.cfg)
        dyn = JointDynamics(sc.params, cutoff, sc.cfg.tail_tol)
        p0 = stack0[:, 0, 0].real
        c0 = stack0[:, 0, 1]
        for i, t in enumerate(t_grid):
            mp = dyn.map_point(float(t))
            p_joint = mp.p11 * p0 + mp.p10 * (1.0 - p0)
            c_joint = mp.kappa * c0
            dist = np.sqrt((me[i, :, 0, 0].real - p_joint) ** 2
                           + np.abs(me[i, :, 0, 1] - c_joint) ** 2)
            worst = max(worst, float(dist.max()))
    elapsed = time.perf_counter() - started
    return CheckResult(
        name="me_vs_joint_oracle",
        passed=worst <= 1e-6 and elapsed <= 120.0,
        measured=f"sup trace distance {worst:.3e}, runtime {elapsed:.1f} s",
        tolerance="1e-6 and 120 s",
        detail=f"{n_states} random initial states, presets fig1 and fig4, gt in [0, 20]")


def check_appendix_d_identity(ctx: VerifyContext) -> CheckResult:
    """Criterion 2: the bath-energy and fixed-point rates agree exactly."""
    worst_rel = 0.0
    details = []
    for name in ("fig1", "fig2"):
        rep = ctx.trace(name)
        es, fp = column(rep, "sigma_es"), column(rep, "sigma_fp")
        ok = ~np.isnan(es) & ~np.isnan(fp)
        scale = np.max(np.abs(fp[ok]))
        rel = np.max(np.abs(es[ok] - fp[ok])) / scale
        worst_rel = max(worst_rel, float(rel))
        details.append(f"{name}: {rel:.2e}")
    return CheckResult(
        name="appendix_d_identity", passed=worst_rel <= 1e-6,
        measured=f"max |sigma_es - sigma_fp| / max|sigma_fp| = {worst_rel:.3e}",
        tolerance="1e-6", detail="; ".join(details))


WEAK_CURVES = ("sigma_es", "sigma_el", "sigma_co", "sigma_fp", "di_ab")


def weak_coincidence_data(ctx: VerifyContext):
    rep = ctx.trace("fig1")
    gt = column(rep, "gt")
    win = (gt <= 3.0) & (column(rep, "masked") == 0)
    curves = {k: column(rep, k)[win] for k in WEAK_CURVES}
    peak = float(np.nanmax(np.abs(curves["sigma_fp"])))
    names = list(curves)
    dev = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            dev[(a, b)] = float(np.nanmax(np.abs(curves[a] - curves[b])))
    return peak, dev


def check_weak_coincidence(ctx: VerifyContext) -> CheckResult:
    """Criterion 3: all five curves pairwise within 5% of the initial peak.

    Four of the five definitions coincide to ~0.1% here; the shifted-gap
    reference curve differs by p-dot * beta_B * (Omega_A - omega_B), which
    at this detuning is roughly 15% of the peak.  The check states the 5%
    tolerance as pinned and reports the breakdown.
    """
    peak, dev = weak_coincidence_data(ctx)
    worst_pair = max(dev, key=dev.get)
    worst = dev[worst_pair] / peak
    no_co = {k: v for k, v in dev.items() if "sigma_co" not in k}
    worst_rest = max(no_co.values()) / peak
    return CheckResult(
        name="weak_coupling_coincidence", passed=worst <= 0.05,
        measured=f"max pairwise deviation {worst:.1%} of peak ({worst_pair[0]} vs {worst_pair[1]})",
        tolerance="5% of the initial-peak height over gt in [0, 3]",
        detail=f"excluding sigma_co the five-curve spread is {worst_rest:.2%}; "
               "sigma_co is offset by the bare-vs-mode gap in its reference state")


def check_theorem1_presets(ctx: VerifyContext) -> CheckResult:
    """Criterion 4a: sign of sigma_map vs P-divisibility on the preset grids."""
    total_checked = total_mismatch = 0
    parts = []
    for name in ("fig1", "fig2", "fig4"):
        sc = ctx.scenario(name)
        rep = theorem1_check(ctx.rate_sets(name), sc.cfg.sign_band,
                             sc.cfg.p_criterion_variant)
        total_checked += rep.n_checked
        total_mismatch += len(rep.mismatches)
        parts.append(f"{name}: {rep.n_checked} decisive, {len(rep.mismatches)} mismatches")
    return CheckResult(
        name="theorem1_presets", passed=total_mismatch == 0,
        measured=f"{total_mismatch} mismatches over {total_checked} decisive grid times",
        tolerance="0 mismatches outside the 1e-9 dead band", detail="; ".join(parts))


def check_theorem1_fuzz(ctx: VerifyContext, n: int = 10_000,
                        seed: int = FUZZ_SEED) -> CheckResult:
    """Criterion 4b: the same equivalence on synthetic fixed-z_inf rate sets."""
    rep = theorem1_check(random_rate_sets(n, seed))
    return CheckResult(
        name="theorem1_fuzz", passed=not rep.mismatches,
        measured=f"{len(rep.mismatches)} mismatches over {rep.n_checked} decisive samples",
        tolerance=f"0 mismatches over {n} random rate sets",
        detail=f"{rep.n_zero_band} samples inside the dead band were skipped")


def check_appendix_e(ctx: VerifyContext) -> CheckResult:
    """Criterion 5: P-divisible instants have non-negative sigma_fp for
    every sampled initial state (the state grid holds >= 500 states)."""
    worst = math.inf
    n_times = 0
    parts = []
    for name in ("fig3", "fig2", "fig4"):   # fig3 shares the fig1 parameters and grid
        rep = ctx.div(name)
        sc = ctx.scenario(name)
        rs_list = rate_set_series(sc.cfg.time_grid(), sc.params,
                                  resolve_cutoff(sc.params, sc.cfg))
        smin = column(rep, "sigma_min")
        per = math.inf
        for i, rs in enumerate(rs_list):
            if rs.singular or math.isnan(smin[i]):
                continue
            # skip boundary-inconclusive instants (margin inside the dead band)
            if p_margin(rs, sc.cfg.p_criterion_variant) <= sc.cfg.sign_band:
                continue
            per = min(per, smin[i])
            n_times += 1
        worst = min(worst, per)
        parts.append(f"{name}: min {per:.2e}")
    n_states = ctx.scenario("fig3").cfg.state_grid ** 2
    return CheckResult(
        name="appendix_e_positivity", passed=worst >= -1e-8,
        measured=f"min sigma_fp over {n_states} states at {n_times} P-divisible times: {worst:.3e}",
        tolerance=">= -1e-8",
        detail="; ".join(parts) + " (fig3 covers the fig1 parameters)")


def check_fixed_point_constancy(ctx: VerifyContext) -> CheckResult:
    """Criterion 6: the instantaneous fixed point equals the constant
    thermal value at the rescaled bath temperature."""
    worst = 0.0
    parts = []
    for name in ("fig1", "fig2", "fig3", "fig4"):
        sc = ctx.scenario(name)
        const = thermal_fixed_point(sc.params).p1_fp
        dev = 0.0
        for rs in ctx.rate_sets(name):
            if rs.singular:
                continue
            try:
                p1 = fixed_point(rs, sc.params).p1_fp
            except SingularRateError:
                p1 = const     # documented fallback at vanishing total rate
            dev = max(dev, abs(p1 - const))
        worst = max(worst, dev)
        parts.append(f"{name}: {dev:.2e}")
    return CheckResult(
        name="fixed_point_constancy", passed=worst <= 1e-8,
        measured=f"sup |p1_fp(t) - 1/(1+e^x)| = {worst:.3e}", tolerance="1e-8",
        detail="; ".join(parts))


FIG4_WINDOW_CENTERS = (1.35, 7.65, 14.0)


def check_fig4_windows(ctx: VerifyContext) -> CheckResult:
    """Criterion 7: the non-P-divisible windows sit at the pinned instants, and inside
    at least one of them the state-minimised rate stays positive while the
    map rate is negative."""
    rep = ctx.div("fig4")
    windows = [(lo, hi) for lo, hi, flag in rep.intervals["p_div"] if not flag]
    gt = column(rep, "gt")
    smin = column(rep, "sigma_min")
    smap = column(rep, "sigma_map")
    matched = []
    for center in FIG4_WINDOW_CENTERS:
        hit = next(((lo, hi) for lo, hi in windows if lo - 0.15 <= center <= hi + 0.15), None)
        matched.append(hit)
    contrast = False
    for hit in matched:
        if hit is None:
            continue
        inside = (gt >= hit[0]) & (gt <= hit[1])
        if np.any((smin[inside] > 0.0) & (smap[inside] < 0.0)):
            contrast = True
    all_found = all(m is not None for m in matched)
    desc = ", ".join(
        f"{c}: {'[%.2f, %.2f]' % m if m else 'missing'}"
        for c, m in zip(FIG4_WINDOW_CENTERS, matched))
    return CheckResult(
        name="fig4_windows", passed=all_found and contrast,
        measured=f"windows {desc}; sigma_min>0 with sigma_map<0 inside: {contrast}",
        tolerance="pinned centers within +-0.15; contrast window exists",
        detail=f"{len(windows)} non-P-divisible windows detected")


def check_conservation(ctx: VerifyContext, n_samples: int = 25) -> CheckResult:
    """Criterion 8: joint entropy, total energy and excitation number stay
    constant; mutual information never dips below -1e-10."""
    worst = 0.0
    min_iab = math.inf
    parts = []
    for name in ("fig1", "fig2", "fig3", "fig4"):
        sc = ctx.scenario(name)
        cutoff = resolve_cutoff(sc.params, sc.cfg)
        dyn = JointDynamics(sc.params, cutoff, sc.cfg.tail_tol)
        if sc.params.beta_a is not None:
            rho0 = sc.resolve_initial_state().mat
        else:
            rho0 = 0.5 * np.eye(2, dtype=complex)
        times = np.linspace(0.0, sc.cfg.t_max, n_samples)
        base = None
        dev = 0.0
        for t in times:
            rho = dyn.evolve_raw(rho0, float(t))
            cons = dyn.conserved_quantities(rho, float(t))
            obs = dyn.observables(rho, float(t))
            min_iab = min(min_iab, obs.i_ab)
            if base is None:
                base = cons
                continue
            dev = max(dev,
                      abs(cons["s_ab"] - base["s_ab"]),
                      abs(cons["energy"] - base["energy"]) / max(abs(base["energy"]), 1.0),
                      abs(cons["excitation"] - base["excitation"]) / max(abs(base["excitation"]), 1.0))
        worst = max(worst, dev)
        parts.append(f"{name}: drift {dev:.1e}")
    passed = worst <= 1e-9 and min_iab >= -1e-10
    return CheckResult(
        name="conservation_suite", passed=passed,
        measured=f"max drift {worst:.2e}, min mutual information {min_iab:.2e}",
        tolerance="drift <= 1e-9, I_AB >= -1e-10", detail="; ".join(parts))


def check_anticorrelation(ctx: VerifyContext) -> CheckResult:
    """Criterion 9: correlation build-up anti-correlates with the coupling
    energy flow at weak coupling."""
    rep = ctx.trace("fig1")
    gt = column(rep, "gt")
    win = (gt >= 0.5) & (gt <= 5.0)
    di = column(rep, "di_ab")[win]
    ei = column(rep, "edot_int")[win]
    ok = ~np.isnan(di)
    r = float(np.corrcoef(di[ok], ei[ok])[0, 1])
    return CheckResult(
        name="weak_coupling_anticorrelation", passed=r < -0.5,
        measured=f"Pearson correlation {r:+.3f}", tolerance="< -0.5",
        detail="mutual-information rate vs coupling-energy rate, gt in [0.5, 5]")


def check_peak_ratio(ctx: VerifyContext) -> CheckResult:
    """Criterion 10: strong-coupling initial peak height and location.

    The height ratio lands inside the pinned range; the computed peak sits at
    gt ~ 0.15 (a quarter of the dominant doublet period) for every
    coupling, so the pinned location gt = 0.5 never matches the maximum of
    the rate itself.  Both clauses are asserted as pinned.
    """
    peaks = {}
    for name in ("fig1", "fig2"):
        rep = ctx.trace(name)
        gt, fp = column(rep, "gt"), column(rep, "sigma_fp")
        win = gt <= 3.0
        idx = int(np.nanargmax(fp[win]))
        peaks[name] = (float(fp[win][idx]), float(gt[win][idx]))
    ratio = peaks["fig2"][0] / peaks["fig1"][0]
    loc = peaks["fig2"][1]
    ratio_ok = 5.0 <= ratio <= 20.0
    loc_ok = abs(loc - 0.5) <= 0.2
    return CheckResult(
        name="strong_coupling_peak", passed=ratio_ok and loc_ok,
        measured=f"ratio {ratio:.1f}, peak at gt = {loc:.3f}",
        tolerance="ratio in [5, 20], peak at gt = 0.5 +- 0.2",
        detail=f"fig1 peak {peaks['fig1'][0]:.4g} at gt {peaks['fig1'][1]:.2f}; "
               f"fig2 peak {peaks['fig2'][0]:.4g}")


# -- additional invariants ---------------------------------------------------


def check_nesting(ctx: VerifyContext, n_fuzz: int = 10_000,
                  seed: int = FUZZ_SEED + 1) -> CheckResult:
    """CP-divisible implies P-divisible implies no backflow, everywhere."""
    bad = 0
    total = 0
    pools = [ctx.rate_sets(n) for n in ("fig1", "fig2", "fig4")]
    pools.append(random_rate_sets(n_fuzz, seed))
    for pool in pools:
        for rs in pool:
            if rs.singular:
                continue
            total += 1
            cp, p, blp = cp_divisible(rs), p_divisible(rs), blp_contractive(rs)
            if (cp and not p) or (p and not blp):
                bad += 1
    return CheckResult(
        name="criteria_nesting", passed=bad == 0,
        measured=f"{bad} violations over {total} rate sets",
        tolerance="0", detail="presets plus synthetic rate sets")


def check_sigma_map_lower_bound(ctx: VerifyContext) -> CheckResult:
    """sigma_map never exceeds sigma_fp_min (it minimises over a superset)."""
    worst = -math.inf
    for name in ("fig3", "fig2", "fig4"):
        rep = ctx.div(name)
        smin = column(rep, "sigma_min")
        smap = column(rep, "sigma_map")
        ok = ~np.isnan(smin) & ~np.isnan(smap)
        if np.any(ok):
            worst = max(worst, float(np.max(smap[ok] - smin[ok])))
    return CheckResult(
        name="sigma_map_lower_bound", passed=worst <= 1e-8,
        measured=f"max (sigma_map - sigma_min) = {worst:.3e}", tolerance="<= 1e-8")


def check_cutoff_convergence(ctx: VerifyContext) -> CheckResult:
    """Doubling the Fock cutoff moves no reported observable by more than 1e-10."""
    worst = 0.0
    try:
        for name in ("fig1", "fig4"):
            sc = ctx.scenario(name)
            base = auto_cutoff(sc.params, sc.cfg.tail_tol)
            rho0 = (sc.resolve_initial_state().mat if sc.params.beta_a is not None
                    else 0.5 * np.eye(2, dtype=complex))
            for t in np.linspace(0.0, sc.cfg.t_max, 7)[1:]:
                obs = []
                for cutoff in (base, 2 * base):
                    dyn = JointDynamics(sc.params, cutoff, sc.cfg.tail_tol)
                    o = dyn.observables(dyn.evolve_raw(rho0, float(t)), float(t))
                    obs.append(np.array([o.s_a, o.s_b, o.i_ab, o.e_b, o.e_int, o.p1]))
                worst = max(worst, float(np.abs(obs[1] - obs[0]).max()))
    except CutoffLeakageError as exc:
        return CheckResult(name="cutoff_convergence", passed=False,
                           measured="cutoff leakage", tolerance="1e-10", detail=str(exc))
    return CheckResult(
        name="cutoff_convergence", passed=worst <= 1e-10,
        measured=f"max observable change on doubling: {worst:.3e}", tolerance="1e-10")


ALL_CHECKS = {
    "me_vs_joint_oracle": check_me_vs_joint,
    "appendix_d_identity": check_appendix_d_identity,
    "weak_coupling_coincidence": check_weak_coincidence,
    "theorem1_presets": check_theorem1_presets,
    "theorem1_fuzz": check_theorem1_fuzz,
    "appendix_e_positivity": check_appendix_e,
    "fixed_point_constancy": check_fixed_point_constancy,
    "fig4_windows": check_fig4_windows,
    "conservation_suite": check_conservation,
    "weak_coupling_anticorrelation": check_anticorrelation,
    "strong_coupling_peak": check_peak_ratio,
    "criteria_nesting": check_nesting,
    "sigma_map_lower_bound": check_sigma_map_lower_bound,
    "cutoff_convergence": check_cutoff_convergence,
}


def scenario_checks(sc: Scenario, threads: int = 1) -> list[CheckResult]:
    """Generic checks applicable to a single (possibly custom) scenario:
    conservation laws, fixed-point constancy, the theorem on its own rate
    grid, and cutoff sanity.  Cutoff leakage surfaces as a failed check."""
    results: list[CheckResult] = []
    cutoff_error: str | None = None
    try:
        cutoff = resolve_cutoff(sc.params, sc.cfg)
        rs_list = rate_set_series(sc.cfg.time_grid(), sc.params, cutoff)
        rep = theorem1_check(rs_list, sc.cfg.sign_band, sc.cfg.p_criterion_variant)
        results.append(CheckResult(
            name="theorem1_grid", passed=not rep.mismatches,
            measured=f"{len(rep.mismatches)} mismatches over {rep.n_checked} decisive times",
            tolerance="0"))
        const = thermal_fixed_point(sc.params).p1_fp
        dev = 0.0
        for rs in rs_list:
            if rs.singular:
                continue
            try:
                dev = max(dev, abs(fixed_point(rs, sc.params).p1_fp - const))
            except SingularRateError:
                pass
        results.append(CheckResult(
            name="fixed_point_constancy", passed=dev <= 1e-8,
            measured=f"{dev:.3e}", tolerance="1e-8"))
        dyn = JointDynamics(sc.params, cutoff, sc.cfg.tail_tol)
        try:
            rho0 = sc.resolve_initial_state().mat
        except ConfigError:
            rho0 = 0.5 * np.eye(2, dtype=complex)
        base = None
        drift = 0.0
        min_iab = math.inf
        for t in np.linspace(0.0, sc.cfg.t_max, 15):
            rho = dyn.evolve_raw(rho0, float(t))
            cons = dyn.conserved_quantities(rho, float(t))
            min_iab = min(min_iab, dyn.observables(rho, float(t)).i_ab)
            if base is None:
                base = cons
            else:
                drift = max(drift, abs(cons["s_ab"] - base["s_ab"]),
                            abs(cons["energy"] - base["energy"]) / max(abs(base["energy"]), 1.0),
                            abs(cons["excitation"] - base["excitation"])
                            / max(abs(base["excitation"]), 1.0))
        results.append(CheckResult(
            name="conservation_suite",
            passed=drift <= 1e-9 and min_iab >= -1e-10,
            measured=f"drift {drift:.2e}, min I_AB {min_iab:.2e}",
            tolerance="1e-9 / -1e-10"))
    except CutoffLeakageError as exc:
        cutoff_error = str(exc)
    if cutoff_error is not None:
        results.append(CheckResult(
            name="cutoff_convergence", passed=False,
            measured="top Fock level populated", tolerance="leakage < 10 * tail_tol",
            detail=cutoff_error))
    return results


def run_verify(target: str | Scenario = "all", names: list[str] | None = None,
               threads: int = 1, echo=print) -> list[CheckResult]:
    """Run the verification scoreboard; returns every executed check."""
    if isinstance(target, Scenario):
        results = scenario_checks(target, threads)
    elif target == "all":
        ctx = VerifyContext(threads=threads)
        selected = names or list(ALL_CHECKS)
        unknown = [n for n in selected if n not in ALL_CHECKS]
        if unknown:
            raise KeyError(f"unknown checks: {', '.join(unknown)}")
        results = [ALL_CHECKS[n](ctx) for n in selected]
    else:
        results = scenario_checks(preset(target), threads)
    for res in results:
        echo(res.line())
    return results

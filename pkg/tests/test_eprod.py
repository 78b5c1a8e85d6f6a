import math
from dataclasses import replace

import numpy as np
import pytest

from jcthermo import eprod, rates
from jcthermo.jcdyn import ModelParams, NumericsConfig, auto_cutoff
from jcthermo.memdiv import sigma_fp_bloch
from jcthermo.qstate import (
    DensityMatrix,
    bloch_from_density,
    thermal_qubit,
    thermal_state,
    von_neumann_entropy,
)

from conftest import random_density


@pytest.fixture(scope="module")
def weak_run(weak_params):
    cfg = NumericsConfig(t_max=5.0 / weak_params.g, n_steps=160)
    return eprod.entropy_production_series(thermal_qubit(1.0, 1.1), weak_params, cfg)


class TestSigmaEs:
    def test_zero_at_start(self, weak_run):
        first = weak_run.samples[0]
        assert abs(first.edot_b) <= 1e-14
        assert first.sigma_es == pytest.approx(first.sdot_a, abs=1e-14)
        assert abs(first.sigma_es) <= 1e-12

    def test_no_coupling_no_production(self):
        params = ModelParams(omega_b=0.6, g=0.0, beta_b=0.3, beta_a=1.1)
        cfg = NumericsConfig(t_max=30.0, n_steps=12)
        run = eprod.entropy_production_series(thermal_qubit(1.0, 1.1), params, cfg)
        for s in run.samples:
            for name in ("sigma_es", "sigma_el", "sigma_co", "sigma_fp", "di_ab"):
                assert abs(getattr(s, name)) <= 1e-12

    def test_cumulative_positivity(self, weak_run):
        t = np.array([s.t for s in weak_run.samples])
        es = np.array([s.sigma_es for s in weak_run.samples])
        cumulative = np.concatenate(
            [[0.0], np.cumsum(0.5 * (es[1:] + es[:-1]) * np.diff(t))])
        assert cumulative.min() >= -1e-6

    def test_combiner(self):
        assert eprod.sigma_es(0.3, -0.1, 2.0) == pytest.approx(0.1, abs=1e-15)


class TestEffectiveBathBeta:
    def test_thermal_round_trip(self):
        for beta, omega_b, dim in ((0.3, 0.6, 120), (3.0, 0.99, 25), (0.18, 1.0, 200)):
            rho_b = thermal_state(omega_b * np.arange(dim), beta)
            got = eprod.effective_bath_beta(rho_b, omega_b)
            assert got == pytest.approx(beta, rel=1e-9)

    def test_ground_state_unresolvable(self):
        rho_b = thermal_state(0.6 * np.arange(40), 1e5)   # entropy essentially zero
        with pytest.raises(eprod.UnresolvableTemperatureError):
            eprod.effective_bath_beta(rho_b, 0.6)

    def test_perturbed_state_round_trip(self):
        rng = np.random.default_rng(61)
        dim, omega_b = 60, 0.6
        base = thermal_state(omega_b * np.arange(dim), 0.4).mat.copy()
        bump = rng.uniform(0.0, 1e-3, size=dim)
        w = np.diag(base).real + bump
        w /= w.sum()
        rho_b = DensityMatrix(np.diag(w.astype(complex)))
        s_target = von_neumann_entropy(rho_b)
        beta = eprod.effective_bath_beta(rho_b, omega_b)
        s_back = eprod._truncated_thermal_entropy(beta, omega_b, dim)
        assert abs(s_back - s_target) <= 1e-10


class TestSigmaEl:
    def test_initial_temperature_matches_bath(self, weak_run, weak_params):
        first = weak_run.samples[0]
        assert first.beta_b_eff == pytest.approx(weak_params.beta_b, rel=1e-9)
        assert first.sigma_el == pytest.approx(first.di_ab, abs=1e-12)

    def test_requires_positive_temperature(self):
        with pytest.raises(eprod.UnresolvableTemperatureError):
            eprod.sigma_el(0.1, 0.1, 0.3, 0.0)

    def test_tracks_information_rate_closely_but_not_exactly(self, weak_run):
        gt = np.array([s.gt for s in weak_run.samples])
        el = np.array([s.sigma_el for s in weak_run.samples])
        di = np.array([s.di_ab for s in weak_run.samples])
        win = gt <= 3.0
        peak = np.nanmax(np.abs(di[win]))
        gap = np.nanmax(np.abs(el[win] - di[win]))
        assert gap <= 0.10 * peak
        assert gap > 0.0   # close, not identical


class TestSigmaCo:
    def test_zero_at_reference_state(self, weak_params):
        cutoff = auto_cutoff(weak_params)
        rs = rates.rate_set(7.0, weak_params, cutoff)
        w = thermal_qubit(rs.omega_shift, weak_params.beta_b)
        assert eprod.sigma_co(w, np.zeros((2, 2), dtype=complex), rs, weak_params) == 0.0

    def test_reduces_to_traditional_when_frozen(self, weak_params):
        # with the shift frozen at the bare gap, sigma_co is Sdot - beta_B Qdot
        cutoff = auto_cutoff(weak_params)
        rs = replace(rates.rate_set(7.0, weak_params, cutoff),
                     omega_shift=weak_params.omega_a)
        rng = np.random.default_rng(67)
        for _ in range(5):
            w = rng.uniform(0.05, 0.95)
            rho = DensityMatrix(np.diag([w, 1.0 - w]).astype(complex))
            rho_dot = rates.generator_apply(rs, rho, weak_params)
            got = eprod.sigma_co(rho, rho_dot, rs, weak_params)
            ref = eprod.traditional_sigma(rho, rho_dot, weak_params)
            assert got == pytest.approx(ref, abs=1e-12)

    def test_offset_from_fixed_point_reference(self, weak_run, weak_params):
        # sigma_co - sigma_fp = pdot * beta_B * (omega_b - Omega_A(t)): the two
        # references differ only in their diagonal log-ratio
        cutoff = auto_cutoff(weak_params)
        for i in (20, 60, 120):
            s = weak_run.samples[i]
            rs = weak_run.rate_sets[i]
            dyn_pdot = s.pdot_a
            expected = dyn_pdot * weak_params.beta_b * (weak_params.omega_b - rs.omega_shift)
            assert s.sigma_co - s.sigma_fp == pytest.approx(expected, abs=1e-10)


class TestSigmaFp:
    def test_zero_at_fixed_point(self, weak_params):
        fp = rates.thermal_fixed_point(weak_params)
        assert eprod.sigma_fp(fp.as_density(), np.zeros((2, 2), dtype=complex), fp) == 0.0

    def test_bloch_form_equals_trace_form(self, weak_params):
        cutoff = auto_cutoff(weak_params)
        rng = np.random.default_rng(71)
        for t in (5.0, 30.0):
            rs = rates.rate_set(t, weak_params, cutoff)
            fp = rates.fixed_point(rs, weak_params)
            for _ in range(10):
                rho = random_density(rng)
                rho_dot = rates.generator_apply(rs, rho, weak_params)
                trace_form = eprod.sigma_fp(DensityMatrix(rho), rho_dot, fp)
                b = bloch_from_density(DensityMatrix(rho))
                vx, vy, vz = rates.bloch_velocity(rs, b.x, b.y, b.z)
                dell = ((b.x * vx + b.y * vy) / b.ell) if b.ell > 1e-14 else 0.0
                bloch_form = float(sigma_fp_bloch(b.ell, b.z, dell, vz, fp.z))
                assert trace_form == pytest.approx(bloch_form, abs=1e-10)

    def test_pure_state_divergence_sentinel(self, weak_params):
        cutoff = auto_cutoff(weak_params)
        rs = rates.rate_set(7.0, weak_params, cutoff)
        fp = rates.fixed_point(rs, weak_params)
        pure = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
        rho_dot = rates.generator_apply(rs, pure, weak_params)
        value = eprod.sigma_fp(pure, rho_dot, fp)
        assert math.isinf(value) and value > 0


class TestRows:
    def test_appendix_d_identity(self, weak_run):
        es = np.array([s.sigma_es for s in weak_run.samples])
        fp = np.array([s.sigma_fp for s in weak_run.samples])
        ok = ~np.isnan(es)
        assert np.abs(es[ok] - fp[ok]).max() <= 1e-6 * np.abs(fp[ok]).max()

    def test_information_rate_additivity(self, weak_run):
        for s in weak_run.samples:
            if not s.masked:
                assert s.di_ab == pytest.approx(s.sdot_a + s.sdot_b, abs=1e-12)

    def test_masked_row_at_singular_instant(self, cold_params):
        cutoff = auto_cutoff(cold_params)
        windows = rates.singular_windows(cold_params, cutoff, 20.0)
        from scipy.optimize import brentq
        lo, hi = windows[0]
        t_star = brentq(
            lambda t: rates.coefficients(t, cold_params, cutoff).alpha
            + rates.coefficients(t, cold_params, cutoff).beta_fn - 1.0,
            lo - 1e-3, hi + 1e-3, xtol=1e-15)
        params = replace(cold_params, beta_a=1.0)
        cfg = NumericsConfig(t_max=20.0, n_steps=10)
        row = eprod.entropy_production_row(t_star, thermal_qubit(1.0, 1.0), params, cfg)
        assert row.masked
        for name in ("sigma_es", "sigma_el", "sigma_co", "sigma_fp", "sdot_a", "di_ab"):
            assert math.isnan(getattr(row, name))
        for name in ("sdot_b", "edot_b", "edot_int", "pdot_a"):
            assert math.isfinite(getattr(row, name))

    def test_single_row_matches_series(self, weak_params):
        cfg = NumericsConfig(t_max=40.0, n_steps=4)
        rho0 = thermal_qubit(1.0, 1.1)
        run = eprod.entropy_production_series(rho0, weak_params, cfg)
        row = eprod.entropy_production_row(float(run.t_grid[2]), rho0, weak_params, cfg)
        assert row.sigma_fp == pytest.approx(run.samples[2].sigma_fp, abs=1e-14)

    def test_threaded_rows_identical(self, weak_params):
        cfg = NumericsConfig(t_max=30.0, n_steps=24)
        rho0 = thermal_qubit(1.0, 1.1)
        serial = eprod.entropy_production_series(rho0, weak_params, cfg, threads=1)
        threaded = eprod.entropy_production_series(rho0, weak_params, cfg, threads=4)
        for a, b in zip(serial.samples, threaded.samples):
            assert a == b

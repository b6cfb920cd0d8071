import numpy as np
import pytest

import resonatorlab as rl
from conftest import grid_around, resonator
from resonatorlab.synth import NOISELESS_FIELD_SIGMA, derive_seed


class TestNoiseSpec:
    def test_noiseless_sentinel(self):
        assert rl.NoiseSpec().noiseless
        assert not rl.NoiseSpec(snr_db=40.0).noiseless

    def test_snr_must_be_positive(self):
        with pytest.raises(ValueError):
            rl.NoiseSpec(snr_db=0.0)


class TestLinearTrace:
    def test_noiseless_equals_model(self, sample_resonator, environment):
        grid = grid_around(sample_resonator)
        trace = rl.generate_linear_trace(
            sample_resonator, environment, grid, -140.0, rl.NoiseSpec()
        )
        model = rl.model_s21_linear(sample_resonator, environment, grid)
        np.testing.assert_array_equal(trace.values, model)
        assert trace.drive_power == -140.0

    def test_same_seed_bit_identical(self, sample_resonator, environment):
        grid = grid_around(sample_resonator)
        spec = rl.NoiseSpec(snr_db=40.0, seed=123)
        t1 = rl.generate_linear_trace(sample_resonator, environment, grid, -140.0, spec)
        t2 = rl.generate_linear_trace(sample_resonator, environment, grid, -140.0, spec)
        np.testing.assert_array_equal(t1.values, t2.values)

    def test_different_seeds_differ(self, sample_resonator, environment):
        grid = grid_around(sample_resonator)
        t1 = rl.generate_linear_trace(
            sample_resonator, environment, grid, -140.0, rl.NoiseSpec(40.0, 1)
        )
        t2 = rl.generate_linear_trace(
            sample_resonator, environment, grid, -140.0, rl.NoiseSpec(40.0, 2)
        )
        assert np.any(t1.values != t2.values)

    def test_noise_amplitude_calibration(self):
        # snr 40 dB at unit background: off-resonant residual std 0.01 within 20%
        res = resonator()
        env = rl.EnvironmentParams()
        f = res.f_r + np.linspace(200, 400, 10000) * res.kappa_l / (2 * np.pi)
        trace = rl.generate_linear_trace(res, env, f, -140.0, rl.NoiseSpec(40.0, 7))
        residual = trace.values - rl.model_s21_linear(res, env, f)
        assert np.sqrt(np.mean(np.abs(residual) ** 2)) == pytest.approx(0.01, rel=0.2)
        per_quad = 0.01 / np.sqrt(2)
        assert np.std(residual.real) == pytest.approx(per_quad, rel=0.05)
        assert np.std(residual.imag) == pytest.approx(per_quad, rel=0.05)


class TestKerrSweep:
    def test_zero_kerr_equals_stacked_linear_traces(self, sample_resonator, environment):
        res, env = sample_resonator, environment
        grid = grid_around(res, points=301)
        powers = [-150.0, -140.0, -130.0]
        params = rl.KerrParams(linear=res, environment=env, kerr=0.0, phi=res.phi0)
        sweep = rl.generate_kerr_sweep(params, grid, powers, "lowest", rl.NoiseSpec(40.0, 9))
        for i, (trace, p) in enumerate(zip(sweep.traces, powers)):
            child = rl.NoiseSpec(snr_db=40.0, seed=derive_seed(9, i))
            expected = rl.generate_linear_trace(res, env, grid, p, child)
            np.testing.assert_array_equal(trace.values, expected.values)

    def test_determinism(self, sample_resonator, environment):
        params = rl.KerrParams(
            linear=sample_resonator, environment=environment, kerr=99.5e3, phi=0.1
        )
        grid = grid_around(sample_resonator, points=201)
        powers = np.arange(-150.0, -120.0, 5.0)
        s1 = rl.generate_kerr_sweep(params, grid, powers, "lowest", rl.NoiseSpec(35.0, 4))
        s2 = rl.generate_kerr_sweep(params, grid, powers, "lowest", rl.NoiseSpec(35.0, 4))
        for t1, t2 in zip(s1.traces, s2.traces):
            np.testing.assert_array_equal(t1.values, t2.values)

    def test_branch_rules_differ_in_bistable_regime(self, sample_resonator, environment):
        params = rl.KerrParams(
            linear=sample_resonator, environment=environment, kerr=99.5e3, phi=0.0
        )
        grid = grid_around(sample_resonator, span_linewidths=14.0, points=801)
        powers = [-113.0]
        low = rl.generate_kerr_sweep(params, grid, powers, "lowest", rl.NoiseSpec())
        high = rl.generate_kerr_sweep(params, grid, powers, "highest", rl.NoiseSpec())
        assert np.max(np.abs(low.traces[0].values - high.traces[0].values)) > 1e-3

    def test_dip_bends_red_above_minus_130(self, sample_resonator, environment):
        # regenerates the measured power-sweep phenomenology
        res = sample_resonator
        params = rl.KerrParams(linear=res, environment=environment, kerr=99.5e3, phi=0.2)
        grid = grid_around(res, span_linewidths=12.0, points=2001)
        powers = np.arange(-150.0, -119.0, 2.0)
        sweep = rl.generate_kerr_sweep(params, grid, powers, "lowest", rl.NoiseSpec())
        dips = np.array(
            [t.frequencies[np.argmin(np.abs(t.values))] for t in sweep.traces]
        )
        quiet = dips[powers < -140.0]
        loud = dips[powers > -130.0]
        assert np.ptp(quiet) < res.kappa_l / (2 * np.pi) / 50.0
        assert loud[-1] < quiet.mean() - res.kappa_l / (2 * np.pi) / 4.0
        assert np.all(np.diff(dips) <= 0.0)


class TestFieldSweep:
    truth = rl.FieldModelParams(f0=7e9, b_crit=66e-3, b_phi0=102e-3)

    def test_noiseless_exact(self):
        fields = np.linspace(0.0, 0.06, 13)
        points = rl.generate_field_sweep(self.truth, fields, sigma_f=0.0)
        expected = rl.fr_vs_field(self.truth, fields)
        np.testing.assert_array_equal([p.resonance for p in points], expected)
        assert all(p.sigma == NOISELESS_FIELD_SIGMA for p in points)

    def test_zero_field_anchor_and_recorded_sigma(self):
        points = rl.generate_field_sweep(self.truth, [0.0, 0.01, 0.02, 0.03], 5e6, seed=3)
        assert abs(points[0].resonance - 7e9) < 5 * 5e6
        assert all(p.sigma == 5e6 for p in points)

    def test_determinism(self):
        fields = np.linspace(0.0, 0.06, 13)
        p1 = rl.generate_field_sweep(self.truth, fields, 5e6, seed=8)
        p2 = rl.generate_field_sweep(self.truth, fields, 5e6, seed=8)
        assert [p.resonance for p in p1] == [p.resonance for p in p2]

    def test_reference_tuning_span(self):
        fields = np.linspace(0.0, 0.06, 13)
        points = rl.generate_field_sweep(self.truth, fields, sigma_f=0.0)
        freqs = np.array([p.resonance for p in points])
        assert freqs[0] == pytest.approx(7e9, rel=1e-12)
        assert 3.0e9 < freqs[-1] < 4.5e9

    def test_domain_violation(self):
        with pytest.raises(rl.DomainError):
            rl.generate_field_sweep(self.truth, [0.0, 0.07], sigma_f=0.0)


def test_derive_seed_is_order_independent():
    seeds_forward = [derive_seed(99, i) for i in range(5)]
    seeds_backward = [derive_seed(99, i) for i in reversed(range(5))]
    assert seeds_forward == list(reversed(seeds_backward))
    assert len(set(seeds_forward)) == 5

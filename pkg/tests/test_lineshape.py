"""Width extraction and model fitting."""

import numpy as np
import pytest
from conftest import merged_grid, reference_params, random_params

from cavlink import (
    ComplexTrace,
    DegenerateParameterError,
    FitConfig,
    InvalidInputError,
    PeakAmbiguityError,
    SystemParams,
    TraceKind,
    WindowTooNarrowError,
    add_noise,
    auto_initial_guess,
    effective_rates,
    extract_fwhm,
    fit_trace,
    multi_trace_fit,
    normalized_power_trace,
    s21,
)
from cavlink.units import TWO_PI


def lorentzian_trace(f0, width, span=32.0, per_linewidth=50, amp=1.0):
    n = int(2 * span * per_linewidth) + 1
    f = np.linspace(f0 - span * width, f0 + span * width, n)
    p = amp / (1.0 + (2.0 * (f - f0) / width) ** 2)
    return ComplexTrace(f, p, TraceKind.POWER)


def flat_trace(level=0.25, n=101):
    f = np.linspace(1e9, 2e9, n)
    return ComplexTrace(f, np.full(n, level), TraceKind.POWER)


class TestExtractFwhm:
    def test_pure_lorentzian_per_mille(self):
        # 50 points per linewidth; the analysis window must span many
        # linewidths or the edge-pinned baseline eats into the tails
        f0, w = 4.7e9, 1.0e6
        trace = lorentzian_trace(f0, w)
        center, fwhm = extract_fwhm(trace, (f0 - 25 * w, f0 + 25 * w))
        assert fwhm == pytest.approx(w, rel=1e-3)
        assert center == pytest.approx(f0, abs=0.01 * w)

    def test_scaling_invariance(self):
        f0, w = 4.7e9, 1.0e6
        trace = lorentzian_trace(f0, w)
        window = (f0 - 20 * w, f0 + 20 * w)
        c1, w1 = extract_fwhm(trace, window)
        scaled = ComplexTrace(trace.freqs, trace.values * 2.0**20, TraceKind.POWER)
        c2, w2 = extract_fwhm(scaled, window)
        assert w2 == pytest.approx(w1, rel=1e-12)
        assert c2 == pytest.approx(c1, rel=1e-12)

    def test_translation_invariance(self):
        f0, w, shift = 60.0e6, 1.0e6, 12345.0
        trace = lorentzian_trace(f0, w)
        moved = ComplexTrace(trace.freqs + shift, trace.values, TraceKind.POWER)
        c1, w1 = extract_fwhm(trace, (f0 - 20 * w, f0 + 20 * w))
        c2, w2 = extract_fwhm(moved, (f0 - 20 * w + shift, f0 + 20 * w + shift))
        assert w2 == pytest.approx(w1, rel=1e-9)
        assert c2 - c1 == pytest.approx(shift, rel=1e-6)

    def test_cavity_linewidth_from_model(self):
        # g = 0 transmission is a bare Lorentzian of width kappa_cav_tot
        p = reference_params(g=0.0)
        kt = p.kappa_cav_tot / TWO_PI
        f0 = p.omega_cav / TWO_PI
        f = np.linspace(f0 - 32 * kt, f0 + 32 * kt, 3201)
        center, fwhm = extract_fwhm(s21(p, f), (f0 - 25 * kt, f0 + 25 * kt))
        assert fwhm == pytest.approx(kt, rel=1e-3)
        assert center == pytest.approx(f0, abs=0.01 * kt)

    def test_flat_trace_has_no_peak(self):
        trace = flat_trace()
        with pytest.raises(PeakAmbiguityError, match="no peak"):
            extract_fwhm(trace, (1.2e9, 1.8e9))

    def test_two_peaks_rejected(self):
        f0, w = 4.7e9, 1.0e6
        f = np.linspace(f0 - 30 * w, f0 + 30 * w, 6001)
        p = 1.0 / (1.0 + (2 * (f - f0 + 8 * w) / w) ** 2)
        p += 1.0 / (1.0 + (2 * (f - f0 - 8 * w) / w) ** 2)
        trace = ComplexTrace(f, p, TraceKind.POWER)
        with pytest.raises(PeakAmbiguityError, match="2 regions"):
            extract_fwhm(trace, (f0 - 25 * w, f0 + 25 * w))

    def test_window_outside_span(self):
        trace = lorentzian_trace(4.7e9, 1.0e6)
        with pytest.raises(InvalidInputError, match="inside the trace"):
            extract_fwhm(trace, (4.7e9, 4.8e9))

    def test_window_not_ordered(self):
        trace = lorentzian_trace(4.7e9, 1.0e6)
        with pytest.raises(InvalidInputError, match="lo < hi"):
            extract_fwhm(trace, (4.7e9 + 1e6, 4.7e9 - 1e6))

    def test_window_with_too_few_samples(self):
        f0, w = 4.7e9, 1.0e6
        trace = lorentzian_trace(f0, w, per_linewidth=2)
        with pytest.raises(WindowTooNarrowError, match="fewer than"):
            extract_fwhm(trace, (f0 - 0.8 * w, f0 + 0.8 * w))

    def test_window_clipping_the_feature(self):
        f0, w = 4.7e9, 1.0e6
        trace = lorentzian_trace(f0, w)
        with pytest.raises(WindowTooNarrowError):
            extract_fwhm(trace, (f0 - 0.6 * w, f0 + 0.6 * w))


class TestFitConfig:
    def test_unknown_parameter(self):
        with pytest.raises(InvalidInputError, match="unknown parameter"):
            FitConfig(free_params=("q_factor",), initial_guess=reference_params())

    def test_empty(self):
        with pytest.raises(InvalidInputError, match="not be empty"):
            FitConfig(free_params=(), initial_guess=reference_params())

    def test_repeated(self):
        with pytest.raises(InvalidInputError, match="repeat"):
            FitConfig(free_params=("g", "g"), initial_guess=reference_params())

    def test_canonical_order(self):
        cfg = FitConfig(free_params=("g", "omega_cav"), initial_guess=reference_params())
        assert cfg.free_params == ("omega_cav", "g")

    def test_bounds_checked_against_guess(self):
        p = reference_params()
        with pytest.raises(InvalidInputError, match="outside bounds"):
            FitConfig(
                free_params=("g",),
                initial_guess=p,
                bounds={"g": (0.0, 0.5 * p.g)},
            )

    def test_bounds_must_be_ordered(self):
        with pytest.raises(InvalidInputError, match="lo < hi"):
            FitConfig(
                free_params=("g",),
                initial_guess=reference_params(),
                bounds={"g": (2.0, 1.0)},
            )

    def test_iteration_and_tolerance_validation(self):
        with pytest.raises(InvalidInputError, match="max_iterations"):
            FitConfig(free_params=("g",), initial_guess=reference_params(), max_iterations=0)
        with pytest.raises(InvalidInputError, match="tolerance"):
            FitConfig(free_params=("g",), initial_guess=reference_params(), tolerance=0.0)


FREE = ("omega_cav", "omega_lc", "kappa_cav_1", "kappa_lc_bare", "g")


def perturbed_guess(truth, free):
    """Offset the guess by 10%: rates relatively, frequencies by a tenth of
    the relevant linewidth (10% of a GHz carrier is outside any local basin)."""
    lc_width = effective_rates(truth).kappa_lc_tot
    changes = {}
    for name in free:
        if name == "omega_cav":
            changes[name] = truth.omega_cav + 0.1 * truth.kappa_cav_tot
        elif name == "omega_lc":
            changes[name] = truth.omega_lc + 0.1 * lc_width
        else:
            changes[name] = getattr(truth, name) * 1.1
    return truth.replace(**changes)


class TestFitTrace:
    def test_round_trip_complex(self):
        truth = reference_params()
        trace = s21(truth, merged_grid(truth))
        cfg = FitConfig(free_params=FREE, initial_guess=perturbed_guess(truth, FREE))
        result = fit_trace(trace, cfg)
        assert result.converged
        for name in FREE:
            got, want = getattr(result.params, name), getattr(truth, name)
            assert got == pytest.approx(want, rel=1e-6), name

    def test_round_trip_power(self):
        truth = reference_params()
        trace = normalized_power_trace(s21(truth, merged_grid(truth)))
        cfg = FitConfig(free_params=FREE, initial_guess=perturbed_guess(truth, FREE))
        result = fit_trace(trace, cfg)
        assert result.converged
        for name in FREE:
            got, want = getattr(result.params, name), getattr(truth, name)
            assert got == pytest.approx(want, rel=1e-6), name

    def test_round_trip_random_draws(self, rng):
        for _ in range(10):
            truth = random_params(rng)
            trace = s21(truth, merged_grid(truth))
            cfg = FitConfig(free_params=FREE, initial_guess=perturbed_guess(truth, FREE))
            result = fit_trace(trace, cfg)
            assert result.converged
            for name in FREE:
                got, want = getattr(result.params, name), getattr(truth, name)
                assert got == pytest.approx(want, rel=1e-6), name

    def test_monotone_cost_trajectory(self):
        truth = reference_params()
        trace = s21(truth, merged_grid(truth))
        cfg = FitConfig(free_params=FREE, initial_guess=perturbed_guess(truth, FREE))
        result = fit_trace(trace, cfg)
        costs = np.array(result.cost_trajectory)
        assert len(costs) >= 2
        assert np.all(np.diff(costs) <= 0.0)

    def test_iteration_cap_flags_nonconvergence(self):
        truth = reference_params()
        trace = s21(truth, merged_grid(truth))
        cfg = FitConfig(
            free_params=FREE,
            initial_guess=perturbed_guess(truth, FREE),
            max_iterations=1,
            tolerance=1e-15,
        )
        result = fit_trace(trace, cfg)
        assert not result.converged
        assert result.iterations == 1

    def test_degenerate_pair_on_power_trace(self):
        # normalized |S21|^2 sees kappa_cav_2 and kappa_cav_loss only
        # through their sum
        truth = reference_params()
        trace = normalized_power_trace(s21(truth, merged_grid(truth)))
        cfg = FitConfig(
            free_params=("kappa_cav_2", "kappa_cav_loss"), initial_guess=truth
        )
        with pytest.raises(DegenerateParameterError) as err:
            fit_trace(trace, cfg)
        assert set(err.value.names) == {"kappa_cav_2", "kappa_cav_loss"}

    def test_too_few_points(self):
        truth = reference_params()
        f0 = truth.omega_cav / TWO_PI
        trace = s21(truth, np.linspace(f0 - 1e8, f0 + 1e8, 20))
        cfg = FitConfig(free_params=FREE, initial_guess=truth)
        with pytest.raises(InvalidInputError, match="points"):
            fit_trace(trace, cfg)

    def test_weights_validated(self):
        truth = reference_params()
        trace = s21(truth, merged_grid(truth))
        cfg = FitConfig(
            free_params=("g",), initial_guess=truth, weights=np.ones(3)
        )
        with pytest.raises(InvalidInputError, match="weights"):
            fit_trace(trace, cfg)

    def test_uncertainties_in_hz_and_nonnegative(self):
        truth = reference_params()
        trace = add_noise(s21(truth, merged_grid(truth)), 0.01, seed=7)
        cfg = FitConfig(free_params=FREE, initial_guess=perturbed_guess(truth, FREE))
        result = fit_trace(trace, cfg)
        assert set(result.uncertainties) == set(FREE)
        for name, sigma in result.uncertainties.items():
            assert sigma >= 0.0
            # 1-sigma on a SNR ~ 100 trace: well below the value, above zero
            assert sigma < abs(getattr(truth, name)) / TWO_PI

    def test_uncertainty_scales_as_root_n(self):
        # quadrupling the point count at fixed noise halves the error bars
        truth = reference_params(g=0.0)
        f0 = truth.omega_cav / TWO_PI
        span = 3.0 * truth.kappa_cav_tot / TWO_PI
        free = ("omega_cav", "kappa_cav_1")
        ratios = []
        for seed in (11, 12, 13):
            sigmas = {}
            for n in (400, 1600):
                trace = add_noise(s21(truth, np.linspace(f0 - span, f0 + span, n)), 0.01, seed)
                result = fit_trace(trace, FitConfig(free_params=free, initial_guess=truth))
                assert result.converged
                sigmas[n] = result.uncertainties
            ratios.append([sigmas[400][k] / sigmas[1600][k] for k in free])
        mean_ratio = np.mean(ratios, axis=0)
        assert np.all(mean_ratio > 1.6) and np.all(mean_ratio < 2.4)


class TestAutoInitialGuess:
    def test_two_feature_trace(self):
        truth = reference_params()
        trace = s21(truth, merged_grid(truth))
        template = truth.replace(omega_cav=7.3e9 * TWO_PI, omega_lc=7.05e9 * TWO_PI)
        guess = auto_initial_guess(trace, template)
        assert guess.omega_cav == pytest.approx(truth.omega_cav, abs=truth.kappa_cav_tot)
        lc_width = effective_rates(truth).kappa_lc_tot
        assert guess.omega_lc == pytest.approx(
            dressed_modes_omega_lc(truth), abs=3 * lc_width
        )
        assert guess.g == template.g  # rates untouched

    def test_flat_trace_rejected(self):
        with pytest.raises(InvalidInputError, match="no feature"):
            auto_initial_guess(flat_trace(), reference_params())

    def test_single_feature_rejected(self):
        truth = reference_params(g=0.0)
        f0 = truth.omega_cav / TWO_PI
        kt = truth.kappa_cav_tot / TWO_PI
        trace = s21(truth, np.linspace(f0 - 10 * kt, f0 + 10 * kt, 2001))
        with pytest.raises(InvalidInputError, match="fewer than two"):
            auto_initial_guess(trace, truth)


def dressed_modes_omega_lc(params):
    from cavlink import dressed_modes

    return dressed_modes(params).omega_lc


class TestMultiTraceFit:
    def hat_traces(self, detunings_hz, g_hz=57e6, noise=0.0):
        traces, truths = [], []
        for i, d in enumerate(detunings_hz):
            truth = reference_params(delta_bare_hz=d, g=g_hz)
            trace = s21(truth, merged_grid(truth))
            if noise > 0.0:
                trace = add_noise(trace, noise, seed=100 + i)
            traces.append(trace)
            truths.append(truth)
        return traces, truths

    def test_identical_traces_zero_scatter(self):
        traces, truths = self.hat_traces([520e6, 520e6])
        cfg = FitConfig(
            free_params=("omega_cav", "omega_lc", "kappa_lc_bare", "g"),
            initial_guess=truths[0],
        )
        joint = multi_trace_fit(traces, ("g",), cfg)
        assert joint.shared_std_errors["g"] == 0.0
        assert joint.consistent["g"]
        assert joint.combined.converged

    def test_shared_g_recovered_across_detunings(self):
        traces, truths = self.hat_traces([250e6, 520e6, 900e6, 1250e6], noise=0.005)
        cfg = FitConfig(
            free_params=("omega_cav", "omega_lc", "kappa_lc_bare", "g"),
            initial_guess=truths[0].replace(g=55e6 * TWO_PI),
        )
        joint = multi_trace_fit(traces, ("g",), cfg)
        assert joint.combined.converged
        assert joint.shared_means["g"] == pytest.approx(57e6 * TWO_PI, rel=0.02)
        assert len(joint.per_trace) == 4
        assert joint.consistent["g"]

    def test_mismatched_g_flagged(self):
        traces_a, truths = self.hat_traces([520e6])
        traces_b, _ = self.hat_traces([900e6], g_hz=57e6 * 1.2)
        cfg = FitConfig(
            free_params=("omega_cav", "omega_lc", "kappa_lc_bare", "g"),
            initial_guess=truths[0],
        )
        joint = multi_trace_fit(traces_a + traces_b, ("g",), cfg)
        assert not joint.consistent["g"]

    def test_needs_two_traces(self):
        traces, truths = self.hat_traces([520e6])
        cfg = FitConfig(free_params=("g",), initial_guess=truths[0])
        with pytest.raises(InvalidInputError, match="at least two"):
            multi_trace_fit(traces, ("g",), cfg)

    def test_shared_must_be_free(self):
        traces, truths = self.hat_traces([520e6, 900e6])
        cfg = FitConfig(free_params=("g",), initial_guess=truths[0])
        with pytest.raises(InvalidInputError, match="not free"):
            multi_trace_fit(traces, ("kappa_cav_1",), cfg)


class TestAddNoise:
    def test_deterministic_per_seed(self):
        trace = s21(reference_params(), merged_grid(reference_params()))
        a = add_noise(trace, 0.01, seed=42)
        b = add_noise(trace, 0.01, seed=42)
        c = add_noise(trace, 0.01, seed=43)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_power_traces_rejected(self):
        trace = normalized_power_trace(s21(reference_params(), merged_grid(reference_params())))
        with pytest.raises(InvalidInputError, match="complex traces"):
            add_noise(trace, 0.01, seed=1)

    def test_negative_amplitude_rejected(self):
        trace = s21(reference_params(), merged_grid(reference_params()))
        with pytest.raises(InvalidInputError, match="non-negative"):
            add_noise(trace, -0.01, seed=1)

    def test_noise_statistics(self):
        f = np.linspace(1e9, 2e9, 4000)
        trace = ComplexTrace(f, np.zeros(4000, dtype=complex), TraceKind.S21)
        noisy = add_noise(trace, 0.02, seed=5)
        assert np.std(noisy.values.real) == pytest.approx(0.02, rel=0.1)
        assert np.std(noisy.values.imag) == pytest.approx(0.02, rel=0.1)
        assert abs(np.mean(noisy.values)) < 0.005

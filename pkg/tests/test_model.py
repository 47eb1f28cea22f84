"""Model-layer tests: shifts, correlations, generation, spectra.

Independent oracles used here:
* pure-Python O(L^2) circular correlation (index arithmetic only),
* dense symmetric eigensolver on explicitly built shift matrices,
* high-precision arithmetic (mpmath) for the frozen noise-level constant.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mra_lab.model import (
    MeasurementSet,
    NoiseModel,
    ProjectionMask,
    alpha_from_sigma_sq,
    apply_shift,
    batch_correlations,
    circular_correlations,
    default_kappa,
    generate_mra,
    generate_pmra,
    nice_signal_check,
    sample_signal,
    shift_sym_eigenvalues,
    sigma_sq_from_alpha,
)


def corr_oracle(x, y):
    """O(L^2) reference: c[ell] = sum_j y_j x_{(j+ell) mod L}."""
    L = len(x)
    return np.array(
        [sum(y[j] * x[(j + ell) % L] for j in range(L)) for ell in range(L)]
    )


def shift_matrix(L, ell):
    """Explicit R_ell with (R_ell x)_j = x_{(j+ell) mod L}."""
    M = np.zeros((L, L))
    M[np.arange(L), (np.arange(L) + ell) % L] = 1.0
    return M


# --------------------------------------------------------------------------
# noise parameterization
# --------------------------------------------------------------------------


class TestAlphaParameterization:
    def test_frozen_value(self):
        # 1024 / (2 ln 1024) to 16 digits (mpmath, dps=40)
        assert sigma_sq_from_alpha(1024, 2.0) == pytest.approx(
            73.86598609351493, rel=1e-12
        )

    def test_exact_unit_noise_case(self):
        # alpha chosen so alpha * ln L = L exactly
        assert sigma_sq_from_alpha(3, 3.0 / math.log(3)) == pytest.approx(
            1.0, rel=1e-14
        )

    def test_round_trip(self):
        assert alpha_from_sigma_sq(500, sigma_sq_from_alpha(500, 0.7)) == pytest.approx(
            0.7, abs=1e-12
        )

    @given(
        L=st.integers(min_value=2, max_value=10_000),
        alpha=st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_round_trip_property(self, L, alpha):
        assert alpha_from_sigma_sq(L, sigma_sq_from_alpha(L, alpha)) == pytest.approx(
            alpha, rel=1e-9
        )

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sigma_sq_from_alpha(1, 2.0)
        with pytest.raises(ValueError):
            sigma_sq_from_alpha(64, 0.0)
        with pytest.raises(ValueError):
            sigma_sq_from_alpha(64, -1.0)
        with pytest.raises(ValueError):
            alpha_from_sigma_sq(64, 0.0)


# --------------------------------------------------------------------------
# shifts
# --------------------------------------------------------------------------


class TestApplyShift:
    def test_small_example(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        assert np.array_equal(apply_shift(x, 1), [1.0, 2.0, 3.0, 0.0])

    def test_identity_and_wraparound(self):
        x = np.arange(7.0)
        assert np.array_equal(apply_shift(x, 0), x)
        assert np.array_equal(apply_shift(x, 7), x)
        assert np.array_equal(apply_shift(x, -3), apply_shift(x, 4))

    @given(
        L=st.integers(min_value=1, max_value=50),
        a=st.integers(min_value=-100, max_value=100),
        b=st.integers(min_value=-100, max_value=100),
    )
    def test_composition(self, L, a, b):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(L)
        lhs = apply_shift(apply_shift(x, a), b)
        rhs = apply_shift(x, a + b)
        assert np.array_equal(lhs, rhs)

    def test_inverse(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(12)
        for ell in range(12):
            assert np.array_equal(apply_shift(apply_shift(x, ell), -ell), x)


# --------------------------------------------------------------------------
# circular correlations
# --------------------------------------------------------------------------


class TestCircularCorrelations:
    def test_against_oracle_100_instances(self):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            L = int(rng.integers(2, 41))  # covers direct (< 16) and FFT paths
            x = rng.standard_normal(L)
            y = rng.standard_normal(L)
            got = circular_correlations(x, y)
            want = corr_oracle(x, y)
            assert np.max(np.abs(got - want)) < 1e-9, f"trial {trial}, L={L}"

    def test_against_oracle_across_scales(self):
        # 100 instances spread over small, odd-prime, and large power-of-two
        # lengths.  The roll-based reference is itself cross-checked against
        # the pure index-arithmetic oracle at the small size.
        def roll_oracle(x, y):
            return np.array([float(y @ np.roll(x, -ell)) for ell in range(len(x))])

        rng = np.random.default_rng(20240)
        for L in (3, 64, 257, 1024):
            for trial in range(25):
                x = rng.standard_normal(L)
                y = rng.standard_normal(L)
                want = roll_oracle(x, y)
                if L == 3:
                    np.testing.assert_allclose(want, corr_oracle(x, y), rtol=1e-12)
                got = circular_correlations(x, y)
                scale = np.max(np.abs(want)) + 1.0
                assert np.max(np.abs(got - want)) / scale < 1e-9, (L, trial)

    def test_basis_vector_indexes_y(self):
        rng = np.random.default_rng(3)
        L = 24
        y = rng.standard_normal(L)
        e0 = np.zeros(L)
        e0[0] = 1.0
        c = circular_correlations(e0, y)
        # R_ell e0 is the basis vector at index (L - ell) % L
        want = np.array([y[(L - ell) % L] for ell in range(L)])
        np.testing.assert_allclose(c, want, atol=1e-12)

    def test_constant_x_gives_column_sums(self):
        rng = np.random.default_rng(4)
        y = rng.standard_normal(20)
        c = circular_correlations(np.ones(20), y)
        np.testing.assert_allclose(c, np.full(20, y.sum()), atol=1e-10)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            circular_correlations(np.ones(4), np.ones(5))

    @given(L=st.integers(min_value=2, max_value=64), seed=st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_matches_shift_inner_products(self, L, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(L)
        y = rng.standard_normal(L)
        c = circular_correlations(x, y)
        for ell in (0, 1, L // 2, L - 1):
            assert c[ell] == pytest.approx(float(y @ apply_shift(x, ell)), abs=1e-8)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(32)
        Y = rng.standard_normal((7, 32))
        C = batch_correlations(x, Y)
        for i in range(7):
            np.testing.assert_allclose(C[i], circular_correlations(x, Y[i]), atol=1e-10)


# --------------------------------------------------------------------------
# signal sampling
# --------------------------------------------------------------------------


class TestSampleSignal:
    def test_deterministic_given_seed(self):
        a = sample_signal(64, np.random.default_rng(99))
        b = sample_signal(64, np.random.default_rng(99))
        assert np.array_equal(a, b)

    def test_large_L_statistics(self):
        L = 100_000
        x = sample_signal(L, np.random.default_rng(7))
        assert abs(float(np.mean(x))) < 0.02
        assert abs(x @ x / L - 1.0) < 0.02
        # one-shift autocorrelation is O(1/sqrt(L))
        assert abs(x @ np.roll(x, -1)) / L < 0.02


# --------------------------------------------------------------------------
# noise model and mask
# --------------------------------------------------------------------------


class TestNoiseModel:
    def test_from_alpha_consistency(self):
        nm = NoiseModel.from_alpha(256, 4.0)
        assert nm.sigma_sq == pytest.approx(256 / (4 * math.log(256)), rel=1e-12)
        assert nm.alpha == 4.0
        assert nm.L_prime is None

    def test_from_sigma_sq(self):
        nm = NoiseModel.from_sigma_sq(256, 4.0)
        assert nm.alpha == pytest.approx(256 / (4 * math.log(256)), rel=1e-12)

    def test_projected_uses_L_prime(self):
        nm = NoiseModel.from_alpha(256, 4.0, L_prime=64)
        assert nm.sigma_sq == pytest.approx(64 / (4 * math.log(256)), rel=1e-12)

    def test_zero_noise_is_alpha_inf(self):
        nm = NoiseModel.from_sigma_sq(64, 0.0)
        assert nm.sigma_sq == 0.0 and math.isinf(nm.alpha)
        nm2 = NoiseModel.from_alpha(64, math.inf)
        assert nm2.sigma_sq == 0.0

    def test_inconsistent_construction_rejected(self):
        with pytest.raises(ValueError):
            NoiseModel(L=256, sigma_sq=5.0, alpha=4.0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            NoiseModel.from_alpha(1, 2.0)
        with pytest.raises(ValueError):
            NoiseModel.from_alpha(64, -1.0)
        with pytest.raises(ValueError):
            NoiseModel.from_sigma_sq(64, -0.5)


class TestProjectionMask:
    def test_full_mask_identity(self):
        mask = ProjectionMask(L=8, kept=np.arange(8))
        v = np.arange(8.0)
        assert np.array_equal(mask.apply(v), v)
        assert mask.L_prime == 8

    def test_subset_sorted(self):
        mask = ProjectionMask(L=8, kept=np.array([5, 1, 3]))
        assert np.array_equal(mask.kept, [1, 3, 5])
        assert np.array_equal(mask.apply(np.arange(8.0)), [1.0, 3.0, 5.0])

    def test_errors(self):
        with pytest.raises(ValueError):
            ProjectionMask(L=8, kept=np.array([8]))
        with pytest.raises(ValueError):
            ProjectionMask(L=8, kept=np.array([1, 1]))
        with pytest.raises(ValueError):
            ProjectionMask(L=8, kept=np.array([], dtype=np.int64))


# --------------------------------------------------------------------------
# data generation
# --------------------------------------------------------------------------


class TestGenerateMra:
    def test_bit_identical_given_seed(self):
        rng = np.random.default_rng(11)
        x = sample_signal(32, rng)
        noise = NoiseModel.from_sigma_sq(32, 2.0)
        a = generate_mra(x, 20, noise, seed=123)
        b = generate_mra(x, 20, noise, seed=123)
        assert np.array_equal(a.observations, b.observations)
        assert np.array_equal(a.true_shifts, b.true_shifts)

    def test_substreams_are_order_independent(self):
        # the first k measurements do not depend on how many are generated
        x = sample_signal(16, np.random.default_rng(12))
        noise = NoiseModel.from_sigma_sq(16, 1.0)
        big = generate_mra(x, 10, noise, seed=5)
        small = generate_mra(x, 4, noise, seed=5)
        assert np.array_equal(big.observations[:4], small.observations)
        assert np.array_equal(big.true_shifts[:4], small.true_shifts)

    def test_noiseless_observations_are_exact_shifts(self):
        x = sample_signal(24, np.random.default_rng(13))
        noise = NoiseModel.from_sigma_sq(24, 0.0)
        ms = generate_mra(x, 5, noise, seed=77)
        for obs, ell in zip(ms.observations, ms.true_shifts):
            assert np.array_equal(obs, apply_shift(x, int(ell)))

    def test_mean_energy(self):
        # E ||Y||^2 / L = 1 + sigma^2 for a unit-power signal draw
        L, sigma_sq, n = 256, 4.0, 2000
        x = sample_signal(L, np.random.default_rng(14))
        x *= math.sqrt(L) / np.linalg.norm(x)
        ms = generate_mra(x, n, NoiseModel.from_sigma_sq(L, sigma_sq), seed=14)
        mean_energy = float(np.mean(np.sum(ms.observations**2, axis=1))) / L
        assert abs(mean_energy - (1.0 + sigma_sq)) < 0.05 * (1.0 + sigma_sq)

    def test_shifts_cover_range(self):
        x = sample_signal(8, np.random.default_rng(15))
        ms = generate_mra(x, 400, NoiseModel.from_sigma_sq(8, 1.0), seed=15)
        assert set(np.unique(ms.true_shifts)) == set(range(8))

    def test_n_edge_cases(self):
        x = sample_signal(8, np.random.default_rng(16))
        noise = NoiseModel.from_sigma_sq(8, 1.0)
        empty = generate_mra(x, 0, noise, seed=0)
        assert empty.n == 0 and empty.observations.shape == (0, 8)
        with pytest.raises(ValueError):
            generate_mra(x, -1, noise, seed=0)

    def test_projected_noise_model_rejected(self):
        x = sample_signal(8, np.random.default_rng(17))
        with pytest.raises(ValueError):
            generate_mra(x, 3, NoiseModel.from_alpha(8, 4.0, L_prime=4), seed=0)


class TestGeneratePmra:
    def test_full_mask_matches_plain_generation(self):
        L = 32
        x = sample_signal(L, np.random.default_rng(18))
        sigma_sq = 3.0
        plain = generate_mra(x, 15, NoiseModel.from_sigma_sq(L, sigma_sq), seed=42)
        full = generate_pmra(
            x,
            ProjectionMask(L=L, kept=np.arange(L)),
            15,
            NoiseModel.from_sigma_sq(L, sigma_sq, L_prime=L),
            seed=42,
        )
        assert np.array_equal(plain.observations, full.observations)
        assert np.array_equal(plain.true_shifts, full.true_shifts)

    def test_projected_energy(self):
        # E ||P_S R_ell x||^2 = L' for x ~ N(0, I)
        L, L_prime = 128, 64
        rng = np.random.default_rng(19)
        mask = ProjectionMask(L=L, kept=rng.choice(L, size=L_prime, replace=False))
        noise = NoiseModel.from_sigma_sq(L, 0.0, L_prime=L_prime)
        energies = []
        for t in range(400):
            x = sample_signal(L, np.random.default_rng(1000 + t))
            ms = generate_pmra(x, mask, 1, noise, seed=t)
            energies.append(float(np.sum(ms.observations[0] ** 2)))
        assert abs(np.mean(energies) - L_prime) < 0.05 * L_prime

    def test_width_is_L_prime(self):
        L, L_prime = 16, 5
        x = sample_signal(L, np.random.default_rng(20))
        mask = ProjectionMask(L=L, kept=np.arange(L_prime))
        ms = generate_pmra(x, mask, 7, NoiseModel.from_alpha(L, 4.0, L_prime=L_prime), seed=3)
        assert ms.observations.shape == (7, L_prime)

    def test_mask_noise_mismatch(self):
        L = 16
        x = sample_signal(L, np.random.default_rng(21))
        mask = ProjectionMask(L=L, kept=np.arange(4))
        with pytest.raises(ValueError):
            generate_pmra(x, mask, 3, NoiseModel.from_alpha(L, 4.0, L_prime=8), seed=0)
        with pytest.raises(ValueError):
            generate_pmra(x, mask, 3, NoiseModel.from_alpha(L, 4.0), seed=0)

    def test_noiseless_hand_example(self):
        # keep coordinate 0 of R_1 (7,8,9) = (8,9,7): the observation is (8).
        # seed=3 is the smallest seed whose first substream draws shift 1.
        x = np.array([7.0, 8.0, 9.0])
        mask = ProjectionMask(L=3, kept=np.array([0]))
        noise = NoiseModel.from_sigma_sq(3, 0.0, L_prime=1)
        ms = generate_pmra(x, mask, 1, noise, seed=3)
        assert ms.true_shifts[0] == 1
        assert np.array_equal(ms.observations, np.array([[8.0]]))


class TestMeasurementSet:
    def test_take_slices_and_tags(self):
        x = sample_signal(8, np.random.default_rng(22))
        ms = generate_mra(x, 10, NoiseModel.from_sigma_sq(8, 1.0), seed=9, lineage="base")
        front = ms.take(0, 6)
        back = ms.take(6, 10)
        assert front.lineage != back.lineage
        assert np.array_equal(np.vstack([front.observations, back.observations]), ms.observations)
        with pytest.raises(ValueError):
            ms.take(5, 20)

    def test_shape_validation(self):
        noise = NoiseModel.from_sigma_sq(8, 1.0)
        with pytest.raises(ValueError):
            MeasurementSet(
                observations=np.zeros((3, 7)),
                true_shifts=np.zeros(3, dtype=np.int64),
                noise=noise,
                mask=None,
                seed=0,
                lineage="bad",
            )
        with pytest.raises(ValueError):
            MeasurementSet(
                observations=np.zeros((3, 8)),
                true_shifts=np.array([0, 1, 8]),
                noise=noise,
                mask=None,
                seed=0,
                lineage="bad",
            )


# --------------------------------------------------------------------------
# symmetrized-shift spectrum
# --------------------------------------------------------------------------


class TestShiftSymEigenvalues:
    def test_frozen_small_case(self):
        np.testing.assert_allclose(
            sorted(shift_sym_eigenvalues(4, 1)), [-2.0, 0.0, 0.0, 2.0], atol=1e-12
        )

    def test_against_dense_eigensolver(self):
        # multiset match for every L <= 32 and every shift
        for L in range(2, 33):
            for ell in range(L):
                M = shift_matrix(L, ell)
                dense = np.linalg.eigvalsh(M + M.T)
                claimed = np.sort(shift_sym_eigenvalues(L, ell))
                np.testing.assert_allclose(claimed, dense, atol=1e-8, err_msg=f"L={L} ell={ell}")

    def test_eigenvalue_sums(self):
        for L in (5, 12, 31):
            assert np.sum(shift_sym_eigenvalues(L, 0)) == pytest.approx(2 * L, abs=1e-8)
            for ell in range(1, L):
                assert np.sum(shift_sym_eigenvalues(L, ell)) == pytest.approx(0.0, abs=1e-8)

    def test_cosine_sums(self):
        for L in (5, 12, 31):
            for ell in range(L):
                total = np.sum(np.cos(2 * np.pi * np.arange(L) * ell / L))
                want = L if ell == 0 else 0.0
                assert total == pytest.approx(want, abs=1e-8)


# --------------------------------------------------------------------------
# nice-signal screen
# --------------------------------------------------------------------------


class TestNiceSignalCheck:
    def test_spike_has_flat_spectrum(self):
        L = 64
        x = np.zeros(L)
        x[0] = math.sqrt(L)
        report = nice_signal_check(x)
        # unitary DFT of sqrt(L) e_0 has all entries of magnitude exactly 1
        assert report.dft_supnorm == pytest.approx(1.0, abs=1e-12)
        assert report.dft_ok
        assert report.max_offdiag == pytest.approx(0.0, abs=1e-12)
        assert report.norm_dev == pytest.approx(0.0, abs=1e-12)
        assert report.autocorr_ok

    def test_constant_signal_fails_both_screens(self):
        # all-ones: every off-diagonal autocorrelation is exactly 1 and the
        # spectrum is a sqrt(L) spike at frequency zero
        L = 256
        report = nice_signal_check(np.ones(L), kappa=0.5)
        assert report.max_offdiag == pytest.approx(1.0, rel=1e-9)
        assert not report.autocorr_ok
        assert report.dft_supnorm == pytest.approx(math.sqrt(L), rel=1e-9)
        assert not report.dft_ok

    def test_gaussian_signals_usually_pass(self):
        L = 4096
        kappa = default_kappa(L)
        passes = 0
        for t in range(100):
            x = sample_signal(L, np.random.default_rng(5000 + t))
            report = nice_signal_check(x, kappa=kappa)
            passes += report.autocorr_ok
        assert passes >= 95

    def test_offdiag_concentration(self):
        # P[max_offdiag > 10 ln L / sqrt(L)] <= 5% empirically
        L = 4096
        threshold = 10 * math.log(L) / math.sqrt(L)
        exceed = 0
        for t in range(100):
            x = sample_signal(L, np.random.default_rng(9000 + t))
            exceed += nice_signal_check(x).max_offdiag > threshold
        assert exceed <= 5

    def test_kappa_domain(self):
        with pytest.raises(ValueError):
            nice_signal_check(np.ones(8), kappa=0.0)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caisar.encoding import (
    ApertureGenerationError,
    EncodedAperture,
    MeasurementSet,
    SensingMatrix,
    add_awgn,
    assemble_sensing_matrix,
    forward_measure,
    generate_encoded_aperture,
    max_row_inner_product,
    mutual_coherence,
    rip_diagnostics,
)


def bernoulli_matrix(n, m, p=0.5, seed=0):
    rng = np.random.default_rng(seed)
    return assemble_sensing_matrix(
        [generate_encoded_aperture(n, p, int(s)) for s in rng.integers(0, 2**32, m)]
    )


class TestGenerateAperture:
    def test_p_one_gives_all_ones(self):
        ap = generate_encoded_aperture(3, 1.0, 7)
        assert np.array_equal(ap.mask, np.ones((3, 3), dtype=np.uint8))

    def test_determinism(self):
        a = generate_encoded_aperture(40, 0.5, 123)
        b = generate_encoded_aperture(40, 0.5, 123)
        assert np.array_equal(a.mask, b.mask)

    def test_different_seeds_differ(self):
        a = generate_encoded_aperture(40, 0.5, 1)
        b = generate_encoded_aperture(40, 0.5, 2)
        assert not np.array_equal(a.mask, b.mask)

    def test_active_count_within_binomial_band(self):
        # central 99.99% interval of binomial(1600, 0.5): 800 +- 78
        count = int(generate_encoded_aperture(40, 0.5, 2024).mask.sum())
        assert 722 <= count <= 878

    @pytest.mark.parametrize("p", [0.0, -0.5, 1.5])
    def test_bad_probability(self, p):
        with pytest.raises(ValueError):
            generate_encoded_aperture(4, p, 0)

    def test_bad_side(self):
        with pytest.raises(ValueError):
            generate_encoded_aperture(0, 0.5, 0)

    def test_zero_mask_retries_then_succeeds(self):
        # tiny grid and p: all-zero draws happen and are retried
        ap = generate_encoded_aperture(1, 0.05, 3, max_retries=200)
        assert ap.mask.sum() == 1

    def test_retry_budget_exhausted(self):
        with pytest.raises(ApertureGenerationError):
            generate_encoded_aperture(1, 1e-12, 0, max_retries=3)

    def test_pooled_activation_rate_near_p(self):
        # 1000 apertures at n=40, p=0.5: pooled per-cell activation rate
        counts = np.zeros((40, 40))
        for seed in range(1000):
            counts += generate_encoded_aperture(40, 0.5, seed).mask
        pooled = counts.mean() / 1000
        assert 0.46 <= pooled <= 0.54
        # no single cell strays beyond 5 sigma of the binomial rate
        sigma = np.sqrt(0.25 / 1000)
        assert np.abs(counts / 1000 - 0.5).max() <= 5 * sigma


class TestAssemble:
    def test_dimensions_paper_case(self):
        phi = bernoulli_matrix(40, 100)
        assert (phi.rows, phi.cols) == (100, 1600)

    def test_single_all_ones_aperture(self):
        ap = generate_encoded_aperture(4, 1.0, 0)
        phi = assemble_sensing_matrix([ap])
        assert np.array_equal(phi.data, np.ones((1, 16)))

    def test_row_mask_round_trip(self):
        rng = np.random.default_rng(5)
        aps = [generate_encoded_aperture(9, 0.4, int(s)) for s in rng.integers(0, 2**32, 12)]
        phi = assemble_sensing_matrix(aps)
        for i, ap in enumerate(aps):
            assert np.array_equal(phi.row_as_mask(i), ap.mask)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            assemble_sensing_matrix([])

    def test_mixed_sizes_rejected(self):
        aps = [generate_encoded_aperture(4, 0.5, 0), generate_encoded_aperture(5, 0.5, 0)]
        with pytest.raises(ValueError, match="side"):
            assemble_sensing_matrix(aps)

    def test_matrix_entries_validated(self):
        with pytest.raises(ValueError, match="0 or 1"):
            SensingMatrix(data=np.full((2, 4), 0.5), side=2)


class TestForwardMeasure:
    def test_single_all_ones_row_sums(self):
        phi = SensingMatrix(data=np.ones((1, 9)), side=3)
        x = np.arange(9.0)
        assert forward_measure(phi, x) == pytest.approx([36.0])

    def test_identity_pattern_reproduces_scene(self):
        phi = SensingMatrix(data=np.eye(16), side=4)
        x = np.linspace(0, 3, 16)
        assert np.array_equal(forward_measure(phi, x), x)

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(9)
        phi = bernoulli_matrix(3, 5, seed=2)
        x = rng.normal(size=9)
        expected = np.array(
            [sum(phi.data[i, j] * x[j] for j in range(9)) for i in range(5)]
        )
        assert np.allclose(forward_measure(phi, x), expected, rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        phi = bernoulli_matrix(3, 5)
        with pytest.raises(ValueError):
            forward_measure(phi, np.ones(8))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        phi = bernoulli_matrix(4, 6, seed=seed)
        x1, x2 = rng.normal(size=16), rng.normal(size=16)
        lhs = forward_measure(phi, a * x1 + b * x2)
        rhs = a * forward_measure(phi, x1) + b * forward_measure(phi, x2)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


class TestCoherence:
    def test_disjoint_column_supports(self):
        phi = SensingMatrix(data=np.eye(4), side=2)
        assert mutual_coherence(phi) == 0.0

    def test_identical_columns(self):
        data = np.zeros((3, 4))
        data[:, 0] = [1, 0, 1]
        data[:, 1] = [1, 0, 1]
        data[0, 2] = 1.0
        phi = SensingMatrix(data=data, side=2)
        assert mutual_coherence(phi) == pytest.approx(1.0)

    def test_matches_brute_force(self):
        phi = bernoulli_matrix(4, 6, seed=3)
        best = 0.0
        a = phi.data
        for i in range(a.shape[1]):
            for j in range(i + 1, a.shape[1]):
                ni, nj = np.linalg.norm(a[:, i]), np.linalg.norm(a[:, j])
                if ni == 0 or nj == 0:
                    continue
                best = max(best, abs(a[:, i] @ a[:, j]) / (ni * nj))
        assert mutual_coherence(phi) == pytest.approx(best, rel=1e-12)

    def test_too_few_nonzero_columns(self):
        data = np.zeros((2, 4))
        data[0, 1] = 1.0
        phi = SensingMatrix(data=data, side=2)
        with pytest.raises(ValueError, match="nonzero columns"):
            mutual_coherence(phi)


class TestRipDiagnostics:
    def test_underdetermined_flag(self):
        report = rip_diagnostics(bernoulli_matrix(40, 100))
        assert report.is_underdetermined
        assert 0.0 <= report.mutual_coherence <= 1.0

    def test_square_matrix_not_underdetermined(self):
        report = rip_diagnostics(SensingMatrix(data=np.eye(9), side=3))
        assert not report.is_underdetermined

    def test_disjoint_rows_inner_product_zero(self):
        data = np.zeros((2, 4))
        data[0, :2] = 1.0
        data[1, 2:] = 1.0
        assert max_row_inner_product(SensingMatrix(data=data, side=2)) == 0.0

    def test_duplicate_rows_counted(self):
        data = np.ones((3, 4))
        data[2, 0] = 0.0
        report = rip_diagnostics(SensingMatrix(data=data, side=2))
        assert report.duplicate_row_count == 1

    def test_zero_columns_counted(self):
        data = np.zeros((2, 4))
        data[:, 0] = 1.0
        data[0, 1] = 1.0
        report = rip_diagnostics(SensingMatrix(data=data, side=2))
        assert report.zero_column_count == 2


class TestAddAwgn:
    def test_high_snr_is_nearly_identity(self):
        y = np.array([1.0, -2.0, 3.0, 0.5])
        out = add_awgn(y, 200.0, 5)
        assert np.allclose(out.y, y, rtol=1e-8)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="SNR"):
            add_awgn(np.zeros(4), 5.0, 1)

    def test_determinism(self):
        y = np.linspace(1, 2, 8)
        a = add_awgn(y, 5.0, 42)
        b = add_awgn(y, 5.0, 42)
        assert np.array_equal(a.y, b.y)
        assert a.snr_db == 5.0 and a.noise_seed == 42

    def test_empirical_snr_five_db(self):
        # pooled over 10,000 independent noise draws
        rng = np.random.default_rng(3)
        y = rng.normal(2.0, 1.0, size=16)
        signal_power = np.mean(y**2)
        noise_sq = 0.0
        trials = 10_000
        for seed in range(trials):
            noise_sq += np.sum((add_awgn(y, 5.0, seed).y - y) ** 2)
        realized = 10 * np.log10(signal_power / (noise_sq / (trials * y.size)))
        assert realized == pytest.approx(5.0, abs=0.1)

    def test_noiseless_constructor(self):
        ms = MeasurementSet.noiseless(np.ones(3))
        assert ms.snr_db is None and ms.noise_seed is None


class TestMaskInvariants:
    def test_mask_immutable(self):
        ap = generate_encoded_aperture(5, 0.5, 1)
        with pytest.raises(ValueError):
            ap.mask[0, 0] = 1

    def test_all_zero_mask_rejected_in_type(self):
        with pytest.raises(ValueError, match="at least one"):
            EncodedAperture(mask=np.zeros((3, 3)), seed=0, bernoulli_p=0.5)

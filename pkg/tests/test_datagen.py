import numpy as np
import pytest

from lrcs.datagen import (SyntheticSpec, gen_exact_lowrank,
                          gen_moving_disk_phantom, gen_three_level, incoherence)
from lrcs.errors import DataError


class TestThreeLevel:
    def test_mean_only_ratios(self):
        spec = SyntheticSpec(n1=8, n2=8, q=10, rank=2,
                             energy_ratios=(1.0, 0.0, 0.0), seed=0)
        data = gen_three_level(spec)
        np.testing.assert_array_equal(data.Z, data.mean[:, None] * np.ones(10))
        assert np.all(data.lowrank == 0) and np.all(data.residual == 0)

    def test_lowrank_part_has_exact_rank(self):
        spec = SyntheticSpec(n1=8, n2=8, q=12, rank=3, seed=1)
        data = gen_three_level(spec)
        s = np.linalg.svd(data.lowrank, compute_uv=False)
        assert np.sum(s > 1e-10 * s[0]) == 3

    def test_frobenius_ratios_exact(self):
        spec = SyntheticSpec(n1=8, n2=6, q=9, rank=2,
                             energy_ratios=(100.0, 10.0, 1.0), seed=2)
        data = gen_three_level(spec)
        assert abs(np.linalg.norm(data.mean[:, None] * np.ones(9)) - 100.0) < 1e-10
        assert abs(np.linalg.norm(data.lowrank) - 10.0) < 1e-10
        assert abs(np.linalg.norm(data.residual) - 1.0) < 1e-10
        np.testing.assert_array_equal(
            data.Z, data.mean[:, None] + data.lowrank + data.residual)

    def test_incoherence_within_limit(self):
        for seed in range(5):
            spec = SyntheticSpec(n1=8, n2=8, q=16, rank=3, seed=seed)
            assert gen_three_level(spec).mu <= 3.0

    def test_sparse_residual_kind(self):
        spec = SyntheticSpec(n1=6, n2=6, q=16, rank=2,
                             residual_kind="temporal-fourier-sparse",
                             sparse_freqs=3, seed=3)
        data = gen_three_level(spec)
        from lrcs.linalg import row_dft_unitary
        S = row_dft_unitary(data.residual)
        nonzero_per_row = np.sum(np.abs(S) > 1e-12 * np.abs(S).max(), axis=1)
        assert np.all(nonzero_per_row <= 3)

    def test_deterministic(self):
        spec = SyntheticSpec(n1=6, n2=6, q=8, rank=2, seed=4)
        a, b = gen_three_level(spec), gen_three_level(spec)
        assert np.array_equal(a.Z, b.Z)

    def test_ratio_validation(self):
        with pytest.raises(DataError):
            SyntheticSpec(n1=4, n2=4, q=4, rank=1, energy_ratios=(1.0, 2.0, 0.0))
        with pytest.raises(DataError):
            SyntheticSpec(n1=4, n2=4, q=4, rank=1, energy_ratios=(0.0, 0.0, 0.0))


class TestPhantom:
    def test_zero_motion_and_uptake_freezes_frames(self):
        cube = gen_moving_disk_phantom(32, 32, 8, amplitude=0.0, uptake_max=0.0,
                                       seed=0)
        for k in range(1, 8):
            np.testing.assert_array_equal(cube[:, :, k], cube[:, :, 0])

    def test_frame_change_within_analytic_bound(self):
        n1 = n2 = 48
        q, amp, period, width, intensity, uptake = 20, 4.0, 25.0, 1.5, 1.0, 0.5
        cube = gen_moving_disk_phantom(n1, n2, q, amplitude=amp, period=period,
                                       edge_width=width, disk_intensity=intensity,
                                       uptake_max=uptake, seed=1)
        # soft edges are (intensity/width)-Lipschitz in the disk center, the
        # center moves at most amp*2*sin(pi/period) per frame, and the uptake
        # ramp adds at most its per-frame increment
        step = amp * 2.0 * np.sin(np.pi / period)
        bound = intensity / width * step + uptake / (q - 1) + 1e-12
        for k in range(q - 1):
            change = np.max(np.abs(cube[:, :, k + 1] - cube[:, :, k]))
            assert change <= bound

    def test_uptake_monotone(self):
        cube = gen_moving_disk_phantom(32, 32, 10, amplitude=0.0, uptake_max=0.8,
                                       seed=2)
        diffs = np.diff(cube.real, axis=2)
        assert np.all(diffs >= -1e-14)

    def test_deterministic_under_seed(self):
        a = gen_moving_disk_phantom(24, 24, 6, seed=5)
        b = gen_moving_disk_phantom(24, 24, 6, seed=5)
        c = gen_moving_disk_phantom(24, 24, 6, seed=6)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_out_of_bounds_geometry(self):
        with pytest.raises(DataError):
            gen_moving_disk_phantom(16, 16, 4, amplitude=10.0)


class TestIncoherence:
    def test_identical_columns_give_one(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        X = np.tile(x[:, None], (1, 7))
        assert abs(incoherence(X) - 1.0) < 1e-10

    def test_matches_column_scan_oracle(self):
        rng = np.random.default_rng(1)
        U, _, X = gen_exact_lowrank(30, 12, 3, seed=2)
        s = np.linalg.svd(X, compute_uv=False)
        r = int(np.sum(s > 1e-8 * s[0]))
        worst = max(np.linalg.norm(X[:, k]) ** 2 for k in range(12))
        oracle = worst * 12 / (r * s[0] ** 2)
        assert abs(incoherence(X) - oracle) < 1e-10

    def test_zero_matrix_rejected(self):
        with pytest.raises(DataError):
            incoherence(np.zeros((4, 4)))


def test_exact_lowrank_factors():
    U, B, X = gen_exact_lowrank(40, 10, 3, seed=7, scale=2.0)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(X, U @ B, atol=1e-14)
    s = np.linalg.svd(X, compute_uv=False)
    np.testing.assert_allclose(s[:3], 2.0, atol=1e-10)
    assert incoherence(X) <= 3.0

import numpy as np
import pytest

from nsaa import _kernels
from nsaa.empirical import SampleWindow, dkw_radius, ks_distance


def brute_ks(a, b, y_max=None):
    """Independent oracle: evaluate both ECDFs at every pooled point."""
    pts = np.unique(np.concatenate([a, b]))
    if y_max is not None:
        pts = pts[pts <= y_max]
    if pts.size == 0:
        return 0.0
    best = 0.0
    for y in pts:
        fa = np.mean(a <= y)
        fb = np.mean(b <= y)
        best = max(best, abs(fa - fb))
    return best


class TestSampleWindow:
    def test_ecdf_basic(self):
        w = SampleWindow(values=[1, 2, 3])
        assert w.ecdf(2.0) == pytest.approx(2 / 3)
        assert w.ecdf(0.5) == 0.0
        assert w.ecdf(5.0) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            SampleWindow().ecdf(1.0)

    def test_sorted_maintained(self):
        rng = np.random.default_rng(0)
        w = SampleWindow()
        vals = rng.uniform(0, 1, 500)
        for v in vals:
            w.append(v)
        assert np.array_equal(w.sorted_values, np.sort(vals))
        assert np.array_equal(w.values, vals)

    def test_period_labels(self):
        w = SampleWindow(start=7, values=[1, 2, 3])
        assert w.start == 7 and w.end == 9


class TestKsDistance:
    def test_identical_windows(self):
        a = SampleWindow(values=[1, 2, 3])
        assert ks_distance(a, a) == 0.0

    def test_fully_separated(self):
        a = SampleWindow(values=[1, 2])
        b = SampleWindow(values=[3, 4])
        assert ks_distance(a, b) == 1.0

    def test_cap_keeps_separation(self):
        a = SampleWindow(values=[1, 2])
        b = SampleWindow(values=[3, 4])
        assert ks_distance(a, b, y_max=2.5) == 1.0

    def test_cap_below_all_points(self):
        a = SampleWindow(values=[1, 2])
        b = SampleWindow(values=[3, 4])
        assert ks_distance(a, b, y_max=0.5) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_distance(SampleWindow(), SampleWindow(values=[1]))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            na, nb = rng.integers(1, 60, 2)
            a = rng.uniform(0, 1, na)
            b = rng.uniform(0, 1, nb)
            if rng.random() < 0.3:  # force ties
                b[: min(na, nb) // 2] = a[: min(na, nb) // 2]
            wa = SampleWindow(values=a)
            wb = SampleWindow(values=b)
            cap = float(rng.uniform(0, 1)) if rng.random() < 0.5 else None
            assert ks_distance(wa, wb, y_max=cap) == pytest.approx(
                brute_ks(a, b, cap), abs=1e-12)

    def test_numba_and_numpy_paths_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = np.sort(rng.uniform(0, 1, int(rng.integers(1, 40))))
            b = np.sort(rng.uniform(0, 1, int(rng.integers(1, 40))))
            cap = float(rng.uniform(0, 1))
            ref = _kernels.ks_sorted_numpy(a, b, cap, True)
            assert _kernels.ks_sorted(a, b, cap, True) == pytest.approx(ref, abs=1e-15)
            ref = _kernels.ks_sorted_numpy(a, b, 0.0, False)
            assert _kernels.ks_sorted(a, b, 0.0, False) == pytest.approx(ref, abs=1e-15)


class TestDkwRadius:
    def test_reference_values(self):
        assert dkw_radius(100, 1000, 0.05) == pytest.approx(0.4183824806, abs=1e-9)
        assert dkw_radius(25, 100, 0.01) == pytest.approx(0.7618046400, abs=1e-9)

    def test_sqrt_scaling(self):
        assert dkw_radius(400, 1000, 0.05) == pytest.approx(
            dkw_radius(100, 1000, 0.05) / 2.0, abs=1e-12)

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            dkw_radius(10, 100, 0.0)
        with pytest.raises(ValueError):
            dkw_radius(10, 100, 1.0)

    def test_nonstationary_dkw_coverage(self):
        # independent non-identical draws: the ECDF stays within the radius
        # of its expectation in essentially every trial
        n, T, delta = 50, 100, 0.05
        radius = dkw_radius(n, T, delta)
        uppers = np.linspace(0.5, 1.5, n)
        rng = np.random.default_rng(2024)
        draws = rng.uniform(0, 1, (10_000, n)) * uppers
        violations = 0
        for row in draws:
            srt = np.sort(row)
            mean_cdf = np.minimum(srt[None, :] / uppers[:, None], 1.0).mean(axis=0)
            hi = np.arange(1, n + 1) / n - mean_cdf
            lo = mean_cdf - np.arange(0, n) / n
            violations += max(hi.max(), lo.max()) > radius
        assert violations / 10_000 <= delta / T**2 + 0.002

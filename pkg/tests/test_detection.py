import math

import numpy as np
import pytest

from nsaa._kernels import ks_sorted_numpy
from nsaa.detection import DetectionConfig, candidate_sizes, detect
from nsaa.empirical import SampleWindow, dkw_radius, ks_distance


def first_fire_lag(pre, post, cfg, check_lags=None):
    """Append pre silently, then post one at a time; return the lag (periods
    after the change) of the first firing among the checked lags, or None."""
    w = SampleWindow(start=1)
    for v in pre:
        w.append(v)
    for i, v in enumerate(post, start=1):
        w.append(v)
        if check_lags is not None and i not in check_lags:
            continue
        if detect(w, cfg) is not None:
            return i
    return None


class TestDetect:
    def test_needs_two_periods(self):
        cfg = DetectionConfig(0.1, 100)
        with pytest.raises(ValueError):
            detect(SampleWindow(values=[1.0]), cfg)

    def test_large_change_fires_quickly(self):
        # maximal KS separation after a long stationary prefix: both grids
        # fire within 200 post-change periods
        rng = np.random.default_rng(0)
        pre = rng.uniform(0.0, 0.2, 4000)
        post = rng.uniform(0.8, 1.0, 200)
        lag_geo = first_fire_lag(pre, post, DetectionConfig(0.1, 8000, "geometric"))
        assert lag_geo is not None and lag_geo <= 200
        lag_all = first_fire_lag(pre, post, DetectionConfig(0.1, 8000, "all"),
                                 check_lags={150, 200})
        assert lag_all is not None and lag_all <= 200
        # the exhaustive grid can only fire earlier or equal when checked at
        # the same lag set
        assert lag_all <= max(200, lag_geo)

    def test_grids_agree_on_detectability(self):
        # KS-gap-1 change with a long prefix: geometric (checked every
        # period) and all (checked at a lag subset) both fire by +200,
        # across seeded instances
        for seed in range(100):
            rng = np.random.default_rng(seed)
            pre = rng.uniform(0.0, 0.3, 4000 + int(rng.integers(0, 300)))
            post = rng.uniform(0.7, 1.0, 200)
            lag_geo = first_fire_lag(pre, post, DetectionConfig(0.1, 8000, "geometric"))
            lag_all = first_fire_lag(pre, post, DetectionConfig(0.1, 8000, "all"),
                                     check_lags={150, 200})
            assert lag_geo is not None, seed
            assert lag_all is not None, seed

    def test_smallest_s_returned(self):
        # cross-check the returned split against an ascending scan of every
        # candidate with the exact threshold
        rng = np.random.default_rng(7)
        vals = np.concatenate([rng.uniform(0.0, 0.2, 3000),
                               rng.uniform(0.8, 1.0, 300)])
        w = SampleWindow(values=vals)
        cfg = DetectionConfig(0.1, 8000, "all")
        s = detect(w, cfg)
        assert s is not None

        n = len(w)
        sorted_left = np.sort(vals[: n - 1])
        r_left = 2.0 * math.sqrt(cfg.log_term / (n - 1))
        expected = None
        for cand in range(1, n + 1):
            k = n - cand + 1
            d = ks_sorted_numpy(sorted_left, np.sort(vals[n - k:]))
            if d > r_left + 2.0 * math.sqrt(cfg.log_term / k):
                expected = cand
                break
        assert s == expected

    def test_monotone_in_evidence(self):
        # pushing right-window mass further from the left support cannot
        # lower the KS statistic, so a firing split keeps firing
        rng = np.random.default_rng(3)
        pre = rng.uniform(0.0, 1.0, 4000)
        near = rng.uniform(1.0, 1.5, 300)
        far = near + 2.0
        cfg = DetectionConfig(0.1, 8000)
        assert detect(SampleWindow(values=np.concatenate([pre, near])), cfg) is not None
        assert detect(SampleWindow(values=np.concatenate([pre, far])), cfg) is not None
        a = SampleWindow(values=pre)
        assert ks_distance(a, SampleWindow(values=far)) >= ks_distance(
            a, SampleWindow(values=near)) - 1e-15

    def test_stationary_false_fire_rate(self):
        # union-bound control, quick version; the acceptance suite runs the
        # full T=2000 protocol
        T = 500
        cfg = DetectionConfig(0.1, T)
        fired = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            w = SampleWindow()
            hit = False
            for v in rng.uniform(0, 1, T):
                w.append(v)
                if len(w) >= 2 and detect(w, cfg) is not None:
                    hit = True
                    break
            fired += hit
        assert fired / 50 <= 0.15

    def test_cap_below_support_blinds_the_test(self):
        # with y_max under every pooled point both ECDFs vanish on the
        # admissible range, so the capped statistic is zero
        rng = np.random.default_rng(12)
        vals = np.concatenate([rng.uniform(1.0, 2.0, 2000),
                               rng.uniform(5.0, 6.0, 400)])
        w = SampleWindow(values=vals)
        assert detect(w, DetectionConfig(0.1, 4000, "all", "capped"), y_max=0.5) is None
        assert detect(w, DetectionConfig(0.1, 4000, "all")) is not None

    def test_capped_mode_requires_value(self):
        cfg = DetectionConfig(0.1, 100, "geometric", "capped")
        with pytest.raises(ValueError):
            detect(SampleWindow(values=[1.0, 2.0]), cfg)


class TestCandidateSizes:
    def test_geometric_structure(self):
        sizes = candidate_sizes(10, "geometric")
        assert list(sizes) == [10, 8, 4, 2, 1]

    def test_all_structure(self):
        assert list(candidate_sizes(4, "all")) == [4, 3, 2, 1]

    def test_threshold_formula_matches_radii(self):
        cfg = DetectionConfig(0.05, 1000)
        n_left, k = 100, 25
        thr = 2 * dkw_radius(n_left, 1000, 0.05) + 2 * dkw_radius(k, 1000, 0.05)
        assert thr == pytest.approx(
            2 * math.sqrt(cfg.log_term / n_left) + 2 * math.sqrt(cfg.log_term / k))

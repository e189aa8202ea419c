import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isotropy import (
    ContrastMatrix,
    GridSpec,
    LagSet,
    SpatialDataset,
    default_contrast,
    default_lag_set,
    enumerate_lag_pairs,
)


def brute_force_pairs(dataset, lag, tol=1e-9):
    """Independent O(n^2) oracle for lag-pair enumeration."""
    out = []
    loc = dataset.locations
    for i in range(dataset.n):
        for j in range(dataset.n):
            d = loc[j] - loc[i] - np.asarray(lag, dtype=float)
            if np.hypot(d[0], d[1]) <= tol:
                out.append((i, j))
    return out


class TestDefaultLagSet:
    def test_standard_four_lags(self):
        ls = default_lag_set()
        assert ls.lags.tolist() == [[1, 0], [0, 1], [1, 1], [-1, 1]]

    def test_scaled(self):
        ls = default_lag_set(2.5)
        assert ls.lags.tolist() == [[2.5, 0], [0, 2.5], [2.5, 2.5], [-2.5, 2.5]]

    def test_extra_pair(self):
        ls = default_lag_set(extra_pair=True)
        assert ls.k == 6
        assert ls.lags[4].tolist() == [1.132, 0.469]
        assert ls.lags[5].tolist() == [-0.469, 1.132]

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            default_lag_set(0.0)


class TestDefaultContrast:
    def test_four_lags(self):
        a = default_contrast(default_lag_set())
        assert a.matrix.tolist() == [[1, -1, 0, 0], [0, 0, 1, -1]]

    def test_six_lags(self):
        a = default_contrast(default_lag_set(extra_pair=True))
        assert a.matrix.shape == (3, 6)
        for row in a.matrix:
            assert sorted(row.tolist()) == [-1, 0, 0, 0, 0, 1]
        assert np.linalg.matrix_rank(a.matrix) == 3

    def test_odd_count_fails(self):
        ls = LagSet([(1, 0), (0, 1), (1, 1)])
        with pytest.raises(ValueError, match="even count"):
            default_contrast(ls)

    def test_rows_sum_to_zero_and_full_rank(self):
        for k in (4, 6):
            a = default_contrast(default_lag_set(extra_pair=(k == 6)))
            assert np.allclose(a.matrix.sum(axis=1), 0.0)
            assert np.linalg.matrix_rank(a.matrix) == a.r


class TestContrastMatrixValidation:
    def test_rejects_nonzero_row_sum(self):
        with pytest.raises(ValueError, match="sum to zero"):
            ContrastMatrix([[1.0, -0.5, 0.0, 0.0]])

    def test_rejects_rank_deficient(self):
        with pytest.raises(ValueError, match="rank"):
            ContrastMatrix([[1, -1, 0, 0], [2, -2, 0, 0]])

    def test_rejects_too_many_rows(self):
        with pytest.raises(ValueError):
            ContrastMatrix(np.eye(4) - 0.25)


class TestEnumerateLagPairs:
    def test_2x2_horizontal(self):
        ds = SpatialDataset([(0, 0), (1, 0), (0, 1), (1, 1)], [0, 0, 0, 0.0])
        pairs = enumerate_lag_pairs(ds, (1, 0))
        assert sorted(map(tuple, pairs)) == brute_force_pairs(ds, (1, 0)) == [(0, 1), (2, 3)]

    def test_2x2_diagonal(self):
        ds = SpatialDataset([(0, 0), (1, 0), (0, 1), (1, 1)], [0, 0, 0, 0.0])
        pairs = enumerate_lag_pairs(ds, (1, 1))
        assert sorted(map(tuple, pairs)) == [(0, 3)]

    def test_beyond_extent_empty(self):
        ds = SpatialDataset([(0, 0), (1, 0), (0, 1), (1, 1)], [0, 0, 0, 0.0])
        assert enumerate_lag_pairs(ds, (100, 100)).shape[0] == 0

    def test_matches_brute_force_on_random_layout(self):
        rng = np.random.default_rng(7)
        loc = np.round(rng.random((30, 2)) * 5, 1)
        loc = np.unique(loc, axis=0)
        ds = SpatialDataset(loc, rng.standard_normal(loc.shape[0]))
        for lag in [(0.1, 0.0), (0.5, -0.3), (1.0, 1.0)]:
            got = sorted(map(tuple, enumerate_lag_pairs(ds, lag, tol=1e-9)))
            assert got == brute_force_pairs(ds, lag)

    def test_grid_pair_count_formula(self):
        # |D(h)| = (n1-a)(n2-b) for nonnegative integer lags on a unit grid
        for n1 in range(2, 7):
            for n2 in range(2, 7):
                g = GridSpec(n1, n2)
                ds = SpatialDataset(g.locations(), np.zeros(g.size), grid=g)
                for a in range(0, 4):
                    for b in range(0, 4):
                        if a == 0 and b == 0:
                            continue
                        expected = max(n1 - a, 0) * max(n2 - b, 0)
                        assert enumerate_lag_pairs(ds, (a, b)).shape[0] == expected

    @settings(max_examples=25, deadline=None)
    @given(
        n1=st.integers(2, 6), n2=st.integers(2, 6),
        a=st.integers(-3, 3), b=st.integers(-3, 3),
    )
    def test_reversal_bijection(self, n1, n2, a, b):
        if a == 0 and b == 0:
            return
        g = GridSpec(n1, n2)
        ds = SpatialDataset(g.locations(), np.zeros(g.size), grid=g)
        fwd = enumerate_lag_pairs(ds, (a, b))
        rev = enumerate_lag_pairs(ds, (-a, -b))
        assert fwd.shape[0] == rev.shape[0]
        assert sorted(map(tuple, fwd)) == sorted((j, i) for i, j in rev)


class TestSpatialDataset:
    def test_duplicate_locations_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            SpatialDataset([(0, 0), (0, 0)], [1.0, 2.0])

    def test_near_duplicate_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            SpatialDataset([(0, 0), (1e-12, 0)], [1.0, 2.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SpatialDataset([(0, 0), (1, 0)], [1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            SpatialDataset([(0, 0), (1, 0)], [1.0, np.nan])

    def test_grid_size_mismatch(self):
        with pytest.raises(ValueError, match="grid"):
            SpatialDataset([(0, 0), (1, 0)], [1.0, 2.0], grid=GridSpec(2, 2))

    def test_off_grid_location(self):
        locs = [(0, 0), (1, 0), (0, 1), (1.3, 1)]
        with pytest.raises(ValueError):
            SpatialDataset(locs, [1, 2, 3, 4.0], grid=GridSpec(2, 2))

    def test_immutable_after_construction(self):
        ds = SpatialDataset([(0, 0), (1, 0)], [1.0, 2.0])
        with pytest.raises(ValueError):
            ds.values[0] = 9.0
        with pytest.raises(ValueError):
            ds.locations[0, 0] = 9.0

    def test_field_matrix_layout(self, grid_2x2):
        f = grid_2x2.field_matrix()
        # columns index x, rows index y
        assert f[0, 0] == 1.0 and f[1, 0] == 2.0
        assert f[0, 1] == 3.0 and f[1, 1] == 5.0

    def test_lag_set_rejects_zero_and_duplicates(self):
        with pytest.raises(ValueError):
            LagSet([(0, 0), (1, 0)])
        with pytest.raises(ValueError):
            LagSet([(1, 0), (1, 0)])

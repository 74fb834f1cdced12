import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualsat.precoding import (SingularChannelError, antenna_load,
                               effective_channel_gains, zf_precoder)


class TestZfPrecoder:
    def test_identity_channel(self):
        w = zf_precoder(np.eye(7))
        np.testing.assert_allclose(w.entries, np.eye(7), atol=1e-12)

    def test_diagonal_inversion(self):
        w = zf_precoder(np.diag([2.0, 4.0]))
        np.testing.assert_allclose(w.entries, np.diag([0.5, 0.25]),
                                   atol=1e-14)

    def test_wide_channel_residual(self):
        rng = np.random.default_rng(0)
        h = rng.normal(size=(5, 7))
        w = zf_precoder(h)
        assert np.abs(h @ w.entries - np.eye(5)).max() <= 1e-8

    def test_square_two_sided_inverse(self):
        rng = np.random.default_rng(1)
        h = rng.normal(size=(6, 6)) + 3 * np.eye(6)
        w = zf_precoder(h)
        np.testing.assert_allclose(w.entries @ h, np.eye(6), atol=1e-9)
        np.testing.assert_allclose(h @ w.entries, np.eye(6), atol=1e-9)

    def test_recompute_bit_identical(self):
        rng = np.random.default_rng(2)
        h = rng.normal(size=(7, 7))
        a = zf_precoder(h).entries
        b = zf_precoder(h).entries
        assert np.array_equal(a, b)

    def test_rank_deficient_rejected(self):
        h = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
        with pytest.raises(SingularChannelError):
            zf_precoder(h)

    def test_more_users_than_antennas_rejected(self):
        with pytest.raises(ValueError):
            zf_precoder(np.ones((4, 3)))

    def test_metadata_carried(self):
        w = zf_precoder(np.eye(3), satellite_id=2, served_user_ids=[9, 4, 7])
        assert w.satellite_id == 2
        assert w.served_user_ids == (9, 4, 7)
        assert w.n_served == 3


@settings(max_examples=40, deadline=None)
@given(c=st.floats(min_value=1e-3, max_value=1e3),
       seed=st.integers(min_value=0, max_value=999))
def test_scaling_property(c, seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(4, 6))
    w = zf_precoder(h).entries
    wc = zf_precoder(c * h).entries
    np.testing.assert_allclose(wc, w / c, rtol=1e-10, atol=1e-13 / c)


class TestAntennaLoad:
    def test_identity(self):
        load = antenna_load(zf_precoder(np.eye(2)))
        np.testing.assert_allclose(load.entries, np.eye(2), atol=1e-14)

    def test_rotation_all_half(self):
        w = zf_precoder(np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2))
        load = antenna_load(w)
        np.testing.assert_allclose(load.entries, 0.5 * np.ones((2, 2)),
                                   atol=1e-12)

    def test_column_sums_are_precoder_norms(self):
        rng = np.random.default_rng(3)
        h = rng.normal(size=(5, 7))
        w = zf_precoder(h)
        load = antenna_load(w)
        np.testing.assert_allclose(load.entries.sum(axis=0),
                                   np.linalg.norm(w.entries, axis=0) ** 2,
                                   rtol=1e-12)
        assert np.all(load.entries >= 0)


class TestEffectiveGains:
    def test_square_inversion_gives_ones(self):
        rng = np.random.default_rng(4)
        h = rng.normal(size=(5, 5)) + 2 * np.eye(5)
        w = zf_precoder(h)
        np.testing.assert_allclose(effective_channel_gains(h, w),
                                   np.ones(5), atol=1e-8)

    def test_scaled_identity(self):
        h = np.eye(3)
        w = zf_precoder(h)
        w.entries = 2.0 * w.entries
        np.testing.assert_allclose(effective_channel_gains(h, w),
                                   4.0 * np.ones(3), atol=1e-12)

    def test_wide_pseudoinverse_gives_ones(self):
        rng = np.random.default_rng(5)
        h = rng.normal(size=(4, 6))
        w = zf_precoder(h)
        np.testing.assert_allclose(effective_channel_gains(h, w),
                                   np.ones(4), atol=1e-8)

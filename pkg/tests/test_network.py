import math

import numpy as np
import pytest

from mcsched import ChannelParams, ConfigurationError, Dimensions, NetworkInstance, UsageError, UtilityTensor
from mcsched.network import compute_sinr, compute_utilities, generate_instance, hex_centers, load_config, sinr_tensor


def flat_instance(dims, power=1.0, gain=1.0, noise=1.0, gap=1.0):
    return NetworkInstance(
        dims=dims,
        power=np.full((dims.clouds, dims.bs_per_cloud, dims.pzs_per_bs), power),
        gain=np.full(dims.shape, gain, dtype=complex),
        noise_variance=noise,
        sinr_gap=gap,
    )


class TestDimensions:
    def test_total_pzs_and_shape(self):
        d = Dimensions(clouds=3, bs_per_cloud=3, pzs_per_bs=5, users=24)
        assert d.total_pzs == 45
        assert d.shape == (3, 24, 3, 5)

    @pytest.mark.parametrize("bad", [0, -1, 1.5, True])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(UsageError):
            Dimensions(clouds=bad, bs_per_cloud=1, pzs_per_bs=1, users=1)

    def test_schedulable(self):
        assert Dimensions(2, 2, 3, 4).is_schedulable()
        assert not Dimensions(2, 2, 3, 3).is_schedulable()


class TestSinr:
    def test_single_bs_has_no_interference(self):
        d = Dimensions(1, 1, 1, 1)
        inst = flat_instance(d, power=2.0, gain=0.5, noise=0.1, gap=2.0)
        assert compute_sinr(inst, 0, 0, 0, 0) == pytest.approx(2.0 * 0.25 / (2.0 * 0.1), rel=1e-15)

    def test_zero_interferer_gain(self):
        d = Dimensions(2, 2, 1, 1)
        gain = np.zeros(d.shape, dtype=complex)
        gain[0, 0, 0, 0] = 0.3 + 0.4j
        inst = NetworkInstance(d, np.full((2, 2, 1), 3.0), gain, noise_variance=0.5)
        assert compute_sinr(inst, 0, 0, 0, 0) == pytest.approx(3.0 * 0.25 / 0.5, rel=1e-15)

    def test_symmetric_two_cloud_case(self):
        # P|h|^2 / (sigma^2 + P|h|^2), evaluated by hand
        inst = flat_instance(Dimensions(2, 1, 1, 1), power=4.0, gain=0.5, noise=0.25)
        assert compute_sinr(inst, 1, 0, 0, 0) == pytest.approx(1.0 / 1.25, rel=1e-15)

    def test_interference_only_from_same_pz_index(self):
        d = Dimensions(2, 1, 2, 1)
        power = np.ones((2, 1, 2))
        power[1, 0, 1] = 100.0  # loud on z=1 only
        inst = NetworkInstance(d, power, np.ones(d.shape, dtype=complex), noise_variance=1.0)
        assert compute_sinr(inst, 0, 0, 0, 0) == pytest.approx(0.5)
        assert compute_sinr(inst, 0, 0, 0, 1) == pytest.approx(1.0 / 101.0)

    def test_interference_crosses_cloud_boundaries(self):
        d = Dimensions(3, 2, 1, 1)
        inst = flat_instance(d)
        # five interferers: one in the own cloud, four in the others
        assert compute_sinr(inst, 0, 0, 0, 0) == pytest.approx(1.0 / 6.0)

    def test_index_out_of_range(self):
        inst = flat_instance(Dimensions(1, 1, 1, 1))
        with pytest.raises(UsageError):
            compute_sinr(inst, 0, 1, 0, 0)

    def test_vectorised_matches_scalar(self):
        inst = generate_instance(11, Dimensions(2, 2, 3, 4))
        tensor = sinr_tensor(inst)
        for idx in np.ndindex(*inst.dims.shape):
            assert tensor[idx] == pytest.approx(compute_sinr(inst, *idx), rel=1e-12)

    def test_monotone_in_serving_and_interfering_power(self):
        inst = generate_instance(5, Dimensions(2, 1, 1, 2))
        base = compute_sinr(inst, 0, 1, 0, 0)
        up = inst.power.copy()
        up[0, 0, 0] *= 2
        louder = NetworkInstance(inst.dims, up, inst.gain, inst.noise_variance)
        assert compute_sinr(louder, 0, 1, 0, 0) > base
        up = inst.power.copy()
        up[1, 0, 0] *= 2
        jammed = NetworkInstance(inst.dims, up, inst.gain, inst.noise_variance)
        assert compute_sinr(jammed, 0, 1, 0, 0) < base

    def test_scale_invariance(self):
        inst = generate_instance(6, Dimensions(2, 2, 2, 3))
        k = 1234.5
        scaled = NetworkInstance(inst.dims, inst.power * k, inst.gain, inst.noise_variance * k, inst.sinr_gap)
        np.testing.assert_allclose(sinr_tensor(scaled), sinr_tensor(inst), rtol=1e-12)


class TestUtilities:
    @pytest.mark.parametrize("snr, rate", [(0.0, 0.0), (1.0, 1.0), (3.0, 2.0)])
    def test_log2_rate(self, snr, rate):
        d = Dimensions(1, 1, 1, 1)
        # noise is chosen so that P|h|^2 / sigma^2 equals snr; zero SINR via zero gain
        gain = 0.0 if snr == 0 else 1.0
        inst = flat_instance(d, power=1.0, gain=gain, noise=1.0 / snr if snr else 1.0)
        assert compute_utilities(inst).value(0, 0, 0, 0) == pytest.approx(rate, abs=1e-15)

    def test_pure_function(self):
        inst = generate_instance(2, Dimensions(2, 2, 2, 4))
        assert np.array_equal(compute_utilities(inst).pi, compute_utilities(inst).pi)

    def test_external_tensor_accepted(self):
        u = UtilityTensor(np.arange(8.0).reshape(2, 2, 1, 2))
        assert u.dims == Dimensions(clouds=2, bs_per_cloud=1, pzs_per_bs=2, users=2)

    @pytest.mark.parametrize("bad", [np.ones((2, 2, 2)), np.full((1, 1, 1, 1), np.nan)])
    def test_rejects_bad_tensor(self, bad):
        with pytest.raises(UsageError):
            UtilityTensor(bad)

    def test_read_only(self):
        u = UtilityTensor(np.ones((1, 1, 1, 1)))
        with pytest.raises(ValueError):
            u.pi[0, 0, 0, 0] = 2.0


class TestGenerator:
    def test_deterministic(self):
        d = Dimensions(2, 2, 3, 5)
        a, b = generate_instance(42, d), generate_instance(42, d)
        assert np.array_equal(a.gain, b.gain) and np.array_equal(a.user_xy, b.user_xy)

    def test_full_scale_shape(self):
        inst = generate_instance(0, Dimensions(3, 3, 5, 24))
        assert inst.gain.shape == (3, 24, 3, 5) and inst.gain.size == 1080

    def test_seeds_differ(self):
        d = Dimensions(2, 2, 2, 4)
        a, b = generate_instance(1, d), generate_instance(2, d)
        assert not np.any(a.gain == b.gain)

    def test_common_random_numbers_across_user_counts(self):
        small = generate_instance(9, Dimensions(2, 2, 3, 4))
        large = generate_instance(9, Dimensions(2, 2, 3, 8))
        assert np.array_equal(small.gain, large.gain[:, :4])
        assert np.array_equal(small.bs_xy, large.bs_xy)

    def test_hex_layout_spacing(self):
        centers = hex_centers(7, 500.0)
        dists = np.linalg.norm(centers[1:] - centers[0], axis=1)
        np.testing.assert_allclose(dists, 500.0)
        pair = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
        assert pair[~np.eye(7, dtype=bool)].min() == pytest.approx(500.0)

    def test_table_defaults(self):
        p = ChannelParams()
        inst = generate_instance(0, Dimensions(1, 1, 2, 1), p)
        assert inst.sinr_gap == 1.0
        assert inst.power[0, 0, 0] == pytest.approx(10 ** (-42.60 / 10) * 1e-3 * 10e6 / 2)
        assert inst.noise_variance == pytest.approx(10 ** (-168.60 / 10) * 1e-3 * 10e6 / 2)

    def test_users_per_cloud_places_users_in_their_cell(self):
        p = ChannelParams(users_per_cloud=True)
        inst = generate_instance(3, Dimensions(3, 1, 1, 6), p)
        centers = hex_centers(3, 500.0)
        nearest = np.argmin(np.linalg.norm(inst.user_xy[:, None] - centers[None], axis=-1), axis=1)
        assert list(nearest) == [0, 0, 1, 1, 2, 2]

    def test_bs_inside_own_cell(self):
        inst = generate_instance(4, Dimensions(4, 3, 1, 4))
        centers = hex_centers(4, 500.0)
        for c in range(4):
            assert np.all(np.linalg.norm(inst.bs_xy[c] - centers[c], axis=1) <= 500 / math.sqrt(3) + 1e-9)

    @pytest.mark.parametrize("field, value", [("cell_distance_m", -1.0), ("bandwidth_hz", 0.0),
                                              ("shadowing_db", -2.0), ("sinr_gap_db", -1.0)])
    def test_non_physical_params(self, field, value):
        with pytest.raises(ConfigurationError):
            ChannelParams(**{field: value})

    def test_negative_seed(self):
        with pytest.raises(ConfigurationError):
            generate_instance(-1, Dimensions(1, 1, 1, 1))

    def test_save_load_round_trip(self, tmp_path):
        inst = generate_instance(8, Dimensions(2, 2, 2, 3), ChannelParams(shadowing_db=4.0))
        path = tmp_path / "inst.json"
        inst.save(path)
        back = NetworkInstance.load(path)
        assert np.array_equal(back.gain, inst.gain) and np.array_equal(back.power, inst.power)
        assert back.params == inst.params and back.seed == 8
        assert np.array_equal(compute_utilities(back).pi, compute_utilities(inst).pi)

    def test_load_config(self, tmp_path):
        cfg = tmp_path / "channel.yaml"
        cfg.write_text("cell_distance_m: 400\nshadowing_db: 6\nseed: 17\n")
        params, seed = load_config(cfg)
        assert params.cell_distance_m == 400.0 and params.shadowing_db == 6.0 and seed == 17

    def test_load_config_rejects_unknown_key(self, tmp_path):
        cfg = tmp_path / "channel.yaml"
        cfg.write_text("cell_size: 400\n")
        with pytest.raises(ConfigurationError):
            load_config(cfg)

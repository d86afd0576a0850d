import math

import numpy as np
import pytest
from scipy import integrate

from conftest import empirical_ks
from gcfs.models import (
    RayleighChannel,
    SystemParams,
    TabulatedChannel,
    TrafficModel,
    UniformChannel,
    mean_arrival_bits,
    rate_bits_per_symbol,
    sample_arrivals,
)


class TestRate:
    def test_zero_gain_gives_zero_rate(self):
        assert rate_bits_per_symbol(0.0, 7.3) == 0.0

    def test_unit_gain_unit_snr(self):
        assert rate_bits_per_symbol(1.0, 1.0) == 1.0

    def test_sqrt3_gain(self):
        assert rate_bits_per_symbol(math.sqrt(3.0), 1.0) == pytest.approx(2.0, abs=1e-12)

    def test_strictly_increasing_in_gain_and_snr(self):
        gains = np.linspace(0.01, 5.0, 40)
        rates = rate_bits_per_symbol(gains, 2.0)
        assert np.all(np.diff(rates) > 0)
        snrs = np.logspace(-2, 3, 40)
        rates = np.array([rate_bits_per_symbol(1.3, s) for s in snrs])
        assert np.all(np.diff(rates) > 0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            rate_bits_per_symbol(-0.1, 1.0)
        with pytest.raises(ValueError):
            rate_bits_per_symbol(1.0, 0.0)
        with pytest.raises(ValueError):
            rate_bits_per_symbol(1.0, -2.0)

    def test_vectorized(self):
        out = rate_bits_per_symbol(np.array([0.0, 1.0]), 1.0)
        assert out.shape == (2,)
        assert out[0] == 0.0 and out[1] == 1.0


class TestChannels:
    @pytest.mark.parametrize("channel", [RayleighChannel(), UniformChannel(h_sup=2.5)])
    def test_cdf_tail_identity(self, channel):
        grid = np.linspace(0.0, 6.0, 200)
        f_plus_g = np.asarray(channel.cdf(grid)) + np.asarray(channel.tail(grid))
        assert np.abs(f_plus_g - 1.0).max() < 1e-15
        assert channel.cdf(0.0) == 0.0
        assert channel.tail(0.0) == 1.0

    @pytest.mark.parametrize("channel", [RayleighChannel(), UniformChannel(h_sup=2.5)])
    def test_tail_nonincreasing(self, channel):
        grid = np.linspace(0.0, 8.0, 300)
        tails = np.asarray(channel.tail(grid))
        assert np.all(np.diff(tails) <= 0)

    def test_rayleigh_cdf_matches_quadrature(self):
        channel = RayleighChannel()
        for h in np.linspace(0.1, 5.0, 15):
            numeric, _ = integrate.quad(channel.pdf, 0.0, h, epsabs=1e-13, epsrel=1e-12)
            assert abs(numeric - channel.cdf(h)) < 1e-9

    def test_rayleigh_density_normalized(self):
        total, _ = integrate.quad(RayleighChannel().pdf, 0.0, np.inf)
        assert abs(total - 1.0) < 1e-9

    @pytest.mark.parametrize(
        "channel",
        [RayleighChannel(), UniformChannel(h_sup=1.7)],
        ids=["rayleigh", "uniform"],
    )
    def test_sampler_matches_cdf(self, channel):
        rng = np.random.default_rng(1234)
        samples = channel.sample(rng, size=100_000)
        assert empirical_ks(samples, channel.cdf) < 0.01

    @pytest.mark.parametrize("channel", [RayleighChannel(), UniformChannel(h_sup=3.0)])
    def test_tail_quantile_inverts_tail(self, channel):
        for prob in (0.5, 1e-2, 1e-6):
            h = channel.tail_quantile(prob)
            assert channel.tail(h) == pytest.approx(prob, rel=1e-9)

    def test_uniform_support(self):
        channel = UniformChannel(h_sup=2.0)
        assert channel.cdf(2.0) == 1.0
        assert channel.pdf(3.0) == 0.0
        assert channel.tail(1.0) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            UniformChannel(h_sup=0.0)


class TestTabulatedChannel:
    def _rayleigh_table(self):
        grid = np.linspace(0.0, 8.0, 400)
        return grid, grid * np.exp(-0.5 * grid * grid)

    def test_matches_source_distribution(self):
        gains, density = self._rayleigh_table()
        channel = TabulatedChannel(gains, density)
        reference = RayleighChannel()
        for h in (0.3, 1.0, 2.2, 4.0):
            assert channel.cdf(h) == pytest.approx(reference.cdf(h), abs=1e-4)
            assert channel.pdf(h) == pytest.approx(reference.pdf(h), rel=1e-3)
        assert channel.h_sup == 8.0

    def test_sampler_matches_own_cdf(self):
        gains, density = self._rayleigh_table()
        channel = TabulatedChannel(gains, density)
        rng = np.random.default_rng(99)
        samples = channel.sample(rng, size=100_000)
        assert empirical_ks(samples, channel.cdf) < 0.01

    def test_renormalizes_unnormalized_density(self):
        gains, density = self._rayleigh_table()
        channel = TabulatedChannel(gains, 7.0 * density)
        assert channel.cdf(channel.h_sup) == pytest.approx(1.0, abs=1e-12)

    def test_from_csv_roundtrip(self, tmp_path):
        gains, density = self._rayleigh_table()
        path = tmp_path / "channel.csv"
        lines = ["h,density"] + [f"{float(h)!r},{float(d)!r}" for h, d in zip(gains, density)]
        path.write_text("\n".join(lines) + "\n")
        channel = TabulatedChannel.from_csv(path)
        assert channel.cdf(1.0) == pytest.approx(RayleighChannel().cdf(1.0), abs=1e-4)

    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            TabulatedChannel([0, 1, 1, 2], [1, 1, 1, 1])  # not strictly increasing
        with pytest.raises(ValueError):
            TabulatedChannel([0, 1, 2, 3], [0, -1, 1, 0])
        with pytest.raises(ValueError):
            TabulatedChannel([0, 1, 2, 3], [0, 0, 0, 0])


class TestTrafficModel:
    def test_mean_bits_examples(self):
        assert TrafficModel(theta=(0.4, 0.6), packet_bits=1.0).mean_bits == pytest.approx(0.6)
        assert TrafficModel(theta=(0.5, 0.5), packet_bits=2.0).mean_bits == pytest.approx(1.0)
        assert TrafficModel(theta=(0.25, 0.5, 0.25), packet_bits=1.0).mean_bits == pytest.approx(1.0)

    def test_mean_arrival_bits_function(self):
        traffic = TrafficModel(theta=(0.4, 0.6))
        assert mean_arrival_bits(traffic) == traffic.mean_bits

    def test_validation(self):
        with pytest.raises(ValueError):
            TrafficModel(theta=(0.5, 0.4))  # does not sum to 1
        with pytest.raises(ValueError):
            TrafficModel(theta=(1.2, -0.2))
        with pytest.raises(ValueError):
            TrafficModel(theta=(0.5, 0.5, 0.0))  # trailing zero
        with pytest.raises(ValueError):
            TrafficModel(theta=(0.5, 0.5), packet_bits=0.0)

    def test_degenerate_no_traffic_allowed(self):
        traffic = TrafficModel(theta=(1.0,))
        assert traffic.max_packets == 0
        assert traffic.mean_bits == 0.0


class TestSampleArrivals:
    def test_point_mass(self):
        traffic = TrafficModel(theta=(0.0, 1.0))
        rng = np.random.default_rng(0)
        draws = sample_arrivals(traffic, rng, size=1000)
        assert np.all(draws == 1)

    def test_bernoulli_mean(self):
        # CLT: 3 sigma = 3*sqrt(0.24)/1000 ~ 0.0015 < 0.002
        traffic = TrafficModel(theta=(0.4, 0.6))
        rng = np.random.default_rng(2024)
        draws = sample_arrivals(traffic, rng, size=1_000_000)
        assert abs(draws.mean() - 0.6) < 0.002

    def test_three_level_mean(self):
        traffic = TrafficModel(theta=(0.25, 0.5, 0.25))
        rng = np.random.default_rng(2025)
        draws = sample_arrivals(traffic, rng, size=1_000_000)
        assert abs(draws.mean() - 1.0) < 0.003

    def test_deterministic_given_stream(self):
        traffic = TrafficModel(theta=(0.3, 0.3, 0.4))
        a = sample_arrivals(traffic, np.random.default_rng(7), size=500)
        b = sample_arrivals(traffic, np.random.default_rng(7), size=500)
        assert np.array_equal(a, b)

    def test_scalar_draw(self):
        traffic = TrafficModel(theta=(0.0, 1.0))
        assert sample_arrivals(traffic, np.random.default_rng(1)) == 1


class TestSystemParams:
    def test_derived_quantities(self):
        params = SystemParams(n_users=10, bandwidth=2.0, slot_duration=3.0, power=8.0, noise_power=2.0)
        assert params.snr == 4.0
        assert params.symbols_per_slot == 6.0

    @pytest.mark.parametrize("field", ["bandwidth", "slot_duration", "power", "noise_power"])
    def test_positivity(self, field):
        kwargs = dict(n_users=10, bandwidth=1.0, slot_duration=1.0, power=1.0, noise_power=1.0)
        kwargs[field] = 0.0
        with pytest.raises(ValueError):
            SystemParams(**kwargs)

    def test_user_count(self):
        with pytest.raises(ValueError):
            SystemParams(n_users=0, bandwidth=1.0, slot_duration=1.0, power=1.0, noise_power=1.0)

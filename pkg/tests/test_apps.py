import numpy as np
import pytest

from partsim.errors import ConfigError
from partsim.netsim import AppSpec, Workload, ZipfSampler, make_rng
from partsim.simtime import MS, SEC


def test_fixed_rate_spacing():
    w = Workload(AppSpec("client", target="x", rate=1000), 0, "h")
    times = [w.next_request()[0] for _ in range(5)]
    assert times == [0, MS, 2 * MS, 3 * MS, 4 * MS]


def test_fixed_rate_no_drift_for_awkward_rates():
    w = Workload(AppSpec("client", target="x", rate=3), 0, "h")
    times = [w.next_request()[0] for _ in range(4)]
    assert times[3] == SEC


def test_poisson_is_seeded():
    spec = AppSpec("client", target="x", rate=5000, arrival="poisson", key_dist="zipf")
    a = [Workload(spec, 7, "h1").next_request() for _ in range(1)]
    w1, w2, w3 = Workload(spec, 7, "h1"), Workload(spec, 7, "h1"), Workload(spec, 8, "h1")
    s1 = [w1.next_request() for _ in range(50)]
    assert s1 == [w2.next_request() for _ in range(50)]
    assert s1 != [w3.next_request() for _ in range(50)]
    assert a[0] == s1[0]
    gaps = np.diff([t for t, _, _ in s1])
    assert (gaps > 0).all()


def test_zipf_rank1_mass():
    s, n = 1.8, 1000
    z = ZipfSampler(s, n)
    rng = make_rng(3, "zipf-check")
    draws = np.array([z.draw(rng) for _ in range(100_000)])
    expected = 1.0 / np.sum(np.arange(1, n + 1, dtype=float) ** -s)
    observed = np.mean(draws == 0)
    assert abs(observed - expected) / expected < 0.05
    assert draws.max() < n


def test_write_fraction():
    w = Workload(AppSpec("client", target="x", write_fraction=0.7), 1, "h")
    writes = sum(w.next_request()[2] for _ in range(20_000))
    assert abs(writes / 20_000 - 0.7) < 0.02


@pytest.mark.parametrize("kw", [
    dict(role="client"), dict(role="client", target="x", rate=0), dict(role="client", target="x", rate=-5),
    dict(role="server", write_fraction=1.5), dict(role="weird"), dict(role="client", target="x", request_size=20),
    dict(role="client", target="x", arrival="bursty"),
])
def test_invalid_specs(kw):
    with pytest.raises(ConfigError):
        AppSpec(**kw)


def test_dict_roundtrip():
    spec = AppSpec("client", target="h9", rate=250.0, key_dist="zipf", service_time="3us")
    assert AppSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ConfigError):
        AppSpec.from_dict({"role": "server", "colour": "red"})

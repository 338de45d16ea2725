import math

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import brentq

from wiblock.config import RadioParams, RegistrationPolicy, ScenarioConfig
from wiblock.radio import (Deployment, LinkSuccessMatrix, mean_received_power_db,
                           median_outage_distance, outage_probability, q_function,
                           sample_deployment, success_matrix, write_links_csv)

RADIO = RadioParams()
D_MEDIAN = 80.74825  # root of mean received power = sensitivity, Table 1 radio


def mc_outage(d, radio, n, rng):
    """Fraction of shadowed received powers below sensitivity."""
    shadow = rng.normal(0.0, radio.shadow_sigma_db, size=n)
    power_db = mean_received_power_db(d, radio) + shadow
    return np.mean(power_db < 10 * np.log10(radio.sensitivity_w))


def test_log_distance_slope():
    assert mean_received_power_db(10.0, RADIO) - mean_received_power_db(20.0, RADIO) == \
        pytest.approx(30 * math.log10(2), abs=1e-12)


def test_gain_scaling_is_ten_db():
    loud = RadioParams(gain_tx=10.0)
    assert mean_received_power_db(37.0, loud) - mean_received_power_db(37.0, RADIO) == \
        pytest.approx(10.0, abs=1e-12)


def test_median_outage_distance():
    d = median_outage_distance(RADIO)
    assert d == pytest.approx(D_MEDIAN, abs=1e-4)
    root = brentq(lambda x: mean_received_power_db(x, RADIO) - 10 * math.log10(RADIO.sensitivity_w),
                  1.0, 1000.0, xtol=1e-12)
    assert d == pytest.approx(root, rel=1e-10)
    assert abs(mean_received_power_db(80.74, RADIO) - 10 * math.log10(RADIO.sensitivity_w)) < 0.05
    assert outage_probability(d, RADIO) == pytest.approx(0.5, abs=1e-12)


def test_outage_extremes():
    assert outage_probability(1.0, RADIO) < 1e-6
    assert outage_probability(120.0, RADIO) == pytest.approx(0.80517, abs=5e-5)
    assert q_function(0.0) == 0.5


def test_outage_matches_monte_carlo_at_120m():
    rng = np.random.default_rng(1)
    est = mc_outage(120.0, RADIO, 10**6, rng)
    p = outage_probability(120.0, RADIO)
    assert abs(est - p) < 3 * math.sqrt(p * (1 - p) / 10**6)


def test_outage_monotone_in_distance():
    d = np.linspace(1, 300, 500)
    p = outage_probability(d, RADIO)
    assert np.all(np.diff(p) >= 0)
    inner = (p > 1e-9) & (p < 1 - 1e-9)
    assert np.all(np.diff(p[inner]) > 0)
    assert np.all((p >= 0) & (p <= 1))


def test_deployment_determinism_and_shapes():
    cfg = ScenarioConfig(num_witnesses=4)
    a, b = sample_deployment(cfg, 7), sample_deployment(cfg, 7)
    assert np.array_equal(a.device_positions, b.device_positions)
    assert np.array_equal(a.registration, b.registration)
    assert a.device_positions.shape == (500, 2) and a.witness_positions.shape == (4, 2)
    assert np.all((a.device_positions >= 0) & (a.device_positions <= 100))
    assert not np.array_equal(a.device_positions, sample_deployment(cfg, 8).device_positions)


@pytest.mark.parametrize("policy", list(RegistrationPolicy))
def test_single_witness_registration(policy):
    dep = sample_deployment(ScenarioConfig(num_witnesses=1, registration_policy=policy), 3)
    assert np.all(dep.registration == 0)


def test_uniform_registration_shares():
    k = 10**5
    dep = sample_deployment(ScenarioConfig(num_witnesses=4, num_devices=k), 11)
    share = np.bincount(dep.registration, minlength=4) / k
    assert np.all(np.abs(share - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / k))


def test_nearest_registration():
    dep = sample_deployment(ScenarioConfig(num_witnesses=5,
                                           registration_policy=RegistrationPolicy.NEAREST), 2)
    assert np.array_equal(dep.registration, np.argmin(dep.distances(), axis=1))


def test_colocated_devices_always_connect():
    w = np.array([[10.0, 10.0], [90.0, 90.0]])
    dep = Deployment(np.repeat(w[:1], 3, axis=0), w, np.zeros(3, dtype=int))
    links = success_matrix(dep, RADIO, 1.0)
    assert np.all(links.p_s[:, 0] > 1 - 1e-6)


def test_success_ordered_inversely_to_distance():
    dep = sample_deployment(ScenarioConfig(num_witnesses=6), 5)
    links = success_matrix(dep, RADIO, 1.0)
    for i in range(50):
        order = np.argsort(links.distance_m[i])
        assert np.all(np.diff(links.p_s[i, order]) <= 0)


def test_success_matrix_matches_per_link_monte_carlo():
    dep = sample_deployment(ScenarioConfig(num_witnesses=3, num_devices=5), 4)
    links = success_matrix(dep, RADIO, 1.0)
    rng = np.random.default_rng(9)
    n = 200_000
    for (i, w), p in np.ndenumerate(links.p_s):
        hits = round((1.0 - mc_outage(links.distance_m[i, w], RADIO, n, rng)) * n)
        # exact binomial test at the two-sided 3-sigma level; near-certain links make
        # the normal approximation useless
        assert stats.binomtest(hits, n, p).pvalue > 0.0027


def test_lossless_and_csv(tmp_path):
    dep = sample_deployment(ScenarioConfig(num_witnesses=2, num_devices=3), 0)
    links = LinkSuccessMatrix.lossless(3, 2)
    assert links.shape == (3, 2) and np.all(links.p_s == 1)
    path = tmp_path / "links.csv"
    write_links_csv(path, dep, success_matrix(dep, RADIO, 1.0))
    lines = path.read_text().splitlines()
    assert lines[0] == "device_id,witness_id,distance_m,p_s"
    assert len(lines) == 7

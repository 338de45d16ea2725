import numpy as np
import pytest

from wiblock.config import ScenarioConfig
from wiblock.des import SimSpec, replicate, t_interval
from wiblock.errors import DomainError
from wiblock.radio import LinkSuccessMatrix, sample_deployment

CFG = ScenarioConfig(num_witnesses=2).with_rate(1.0 / 500)


def test_needs_two_replications():
    with pytest.raises(DomainError):
        replicate(SimSpec(CFG, 1e4, "naive"), 1, 0)


def test_identical_seed_identical_aggregate():
    spec = SimSpec(CFG, 2e4, "naive")
    a, b = replicate(spec, 3, 9), replicate(spec, 3, 9)
    assert a.mean == b.mean and a.half_width == b.half_width
    assert replicate(spec, 3, 10).mean != a.mean


def test_parallel_matches_serial():
    spec = SimSpec(CFG, 2e4, "naive")
    assert replicate(spec, 3, 1, workers=2).mean == replicate(spec, 3, 1).mean


def test_wiblock_spec_needs_links():
    with pytest.raises(ValueError):
        SimSpec(CFG, 1e3, "wiblock").run(0)
    with pytest.raises(ValueError):
        SimSpec(CFG, 1e3, "other").run(0)
    dep = sample_deployment(CFG, 0)
    spec = SimSpec(CFG, 2e4, "wiblock", dep, LinkSuccessMatrix.lossless(500, 2))
    agg = replicate(spec, 2, 0)
    assert agg.n_rep == 2 and len(agg.runs) == 2
    lo, hi = agg.interval("global_fraction")
    assert lo <= agg.mean["global_fraction"] <= hi


def test_t_interval():
    m, h = t_interval([1.0, 2.0, 3.0])
    assert m == 2.0 and h == pytest.approx(4.302652729911275 / np.sqrt(3))
    assert np.isnan(t_interval([1.0])[1])


def test_half_width_scaling():
    # the standard error scales as 1/sqrt(n); compare average half-widths of
    # disjoint groups with t-quantiles factored out
    from scipy import stats
    spec = SimSpec(ScenarioConfig(num_witnesses=2).with_rate(0.5 / 500), 2e5, "naive")
    agg = replicate(spec, 64, 3)
    x = np.array([r.mean_gb_sojourn_s for r in agg.runs])
    se = {}
    for n in (4, 16):
        groups = x.reshape(-1, n)
        se[n] = np.mean(np.std(groups, axis=1, ddof=1)) / np.sqrt(n)
    se[64] = np.std(x, ddof=1) / 8
    for a, b in ((4, 16), (16, 64)):
        assert 1.5 <= se[a] / se[b] <= 2.5
    assert agg.half_width["mean_gb_sojourn_s"] == pytest.approx(
        stats.t.ppf(0.975, 63) * se[64], rel=1e-9)

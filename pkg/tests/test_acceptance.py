"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line (visible in the
terminal and in captured logs) before asserting.
"""
import itertools
import math
import warnings

import numpy as np
import pytest

from wiblock.analytic import (gb_mean_confirmation_time, ledger_growth, max_load_naive,
                              max_load_wiblock, service_variance_scv, stationary_mean,
                              witness_mean_queue, witness_stationary)
from wiblock.config import QueueParams, RadioParams, ScenarioConfig
from wiblock.des import SimSpec, replicate, run_naive_sim, run_wiblock_sim
from wiblock.experiments import ExperimentSpec, read_table, run_experiment
from wiblock.radio import (Deployment, LinkSuccessMatrix, mean_received_power_db,
                           median_outage_distance, outage_probability)
from wiblock.selection import (attempt_probability_exact, delivery_success_probability,
                               selection_profiles)

MU_B, B, K = 1.8e-3, 1000, 500


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def balanced(k, v):
    """Every witness gets the same number of registered devices."""
    return Deployment(np.zeros((k, 2)), np.zeros((v, 2)), np.arange(k) % v)


def rel(a, b):
    return abs(a - b) / abs(b)


# 1 ------------------------------------------------------------------------

def test_criterion_1_scalability_bound(report):
    checks = [(max_load_naive(K, B, MU_B), 3.6e-3),
              (max_load_wiblock(K, 2, B, MU_B), 7.2e-3),
              (max_load_wiblock(K, 4, B, MU_B), 4.8e-3),
              (max_load_wiblock(K, 8, B, MU_B), 3.6e-3 * 8 / 7)]
    worst = max(rel(a, e) for a, e in checks)
    ok = worst <= 1e-9 and round(checks[3][0], 6) == 4.114e-3
    report(1, ok, f"worst relative error {worst:.1e}, v=8 bound {checks[3][0]:.6g}")


# 2 ------------------------------------------------------------------------

def test_criterion_2_transaction_split(report, tmp_path):
    run_experiment(ExperimentSpec("fig6", ScenarioConfig(num_witnesses=2), tmp_path,
                                  engines={"analytic", "des"}))
    _, _, rows = read_table(tmp_path / "fig6.csv")
    bad = []
    for r in rows:
        v = int(r["v"])
        exact = float(r["fraction_gb"]) == (v - 1) / v and float(r["fraction_witness"]) == 1 / v
        inside = abs(float(r["des_fraction_gb"]) - (v - 1) / v) <= float(r["des_ci95"])
        if not (exact and inside and int(r["des_confirmed"]) >= 10**5):
            bad.append(v)
    worst = max(abs(float(r["des_fraction_gb"]) - (int(r["v"]) - 1) / int(r["v"]))
                / float(r["des_ci95"]) for r in rows)
    report(2, not bad and len(rows) == 9,
           f"v=2..10, largest deviation {worst:.2f} CI half-widths, min confirmed "
           f"{min(int(r['des_confirmed']) for r in rows)}, failing v: {bad}")


# 3 ------------------------------------------------------------------------

FIG7B_REPS = 16


def test_criterion_3_ledger_ratios(report, tmp_path):
    # each replication draws its own registration; a single k=500 draw alone
    # moves a witness's local share by about 0.011 (one standard deviation)
    run_experiment(ExperimentSpec("fig7b", ScenarioConfig(num_witnesses=2), tmp_path,
                                  engines={"analytic", "des"}, reps=FIG7B_REPS,
                                  sweep_axis=("block_size", [1000])))
    _, _, rows = read_table(tmp_path / "fig7b.csv")
    r = rows[0]
    naive = float(r["des_naive_ledger"])
    gb = float(r["des_gb_ledger"]) / naive
    local = [float(r[f"des_local_ledger_w{w}"]) / naive for w in range(2)]
    ok = naive >= 10**5 and abs(gb - 0.5) <= 0.02 and all(abs(x - 0.25) <= 0.02 for x in local)
    report(3, ok, f"{FIG7B_REPS} deployments, mean naive ledger {naive:.0f}, GB ratio {gb:.4f}, "
                  f"local ratios {local[0]:.4f}, {local[1]:.4f}")


# 4 ------------------------------------------------------------------------

WITNESS_ARRIVALS = 1.0e6


def witness_sets(n=20, seed=4):
    rng = np.random.default_rng(seed)
    sets = [(2, 2.0, 1.0, 0.8)]  # pinned: p=1/2, mu1=2, mu2=1, lambda_w=0.8
    while len(sets) < n:
        v = int(rng.integers(2, 5))
        mu1, mu2 = np.exp(rng.uniform(np.log(0.5), np.log(20.0), 2))
        sets.append((v, float(mu1), float(mu2), float(rng.uniform(0.2, 0.8))))
    return sets


def test_criterion_4_witness_oracle(report):
    k, worst_des, worst_mg, lines = 600, 0.0, 0.0, []
    for v, mu1, mu2, rho in witness_sets():
        p = (v - 1) / v
        mu = 1.0 / (p / mu1 + (1 - p) / mu2)
        lw = rho * mu
        exact = witness_mean_queue(lw, p, mu1, mu2)
        worst_mg = max(worst_mg, rel(stationary_mean(lw, p, mu1, mu2), exact.L))
        # keep the chain tier comfortably stable; it does not affect the witnesses
        rate_B = k * lw / v * p
        cfg = ScenarioConfig(num_witnesses=v, num_devices=k,
                             queue=QueueParams(mu1_tps=mu1, mu2_tps=mu2,
                                               block_rate_bps=2 * rate_B / B)).with_rate(lw * v / k)
        res = run_wiblock_sim(cfg, balanced(k, v), LinkSuccessMatrix.lossless(k, v),
                              WITNESS_ARRIVALS / lw, 100 + len(lines))
        err = rel(res.mean_witness_queue_len_pooled, exact.L)
        worst_des = max(worst_des, err)
        lines.append(err)
    pinned = witness_mean_queue(0.8, 0.5, 2.0, 1.0).L
    ok = worst_des <= 0.03 and worst_mg <= 1e-6 and pinned == pytest.approx(1.6, rel=1e-12)
    report(4, ok, f"20 sets, worst DES error {worst_des:.2%} (mean {np.mean(lines):.2%}), "
                  f"worst matrix-geometric error {worst_mg:.1e}, pinned L {pinned:.6g}")


# 5 ------------------------------------------------------------------------

# (load fraction, replications, horizon per replication)
GB_PLAN = [(0.1, 4, 5e6), (0.5, 10, 1e7), (0.8, 32, 1e7)]


def test_criterion_5_gb_oracle(report):
    cap = B * MU_B
    parts, ok = [], True
    for load, reps, horizon in GB_PLAN:
        lam_B = load * cap
        exact = gb_mean_confirmation_time(lam_B, MU_B, B)
        spec = SimSpec(ScenarioConfig(num_witnesses=2).with_rate(lam_B / K), horizon, "naive")
        agg = replicate(spec, reps, base_seed=int(load * 100))
        err = rel(agg.mean["mean_gb_sojourn_s"], exact)
        ok &= err <= 0.05
        parts.append(f"{load:.0%}: {agg.mean['mean_gb_sojourn_s']:.1f}"
                     f"±{agg.half_width['mean_gb_sojourn_s']:.1f} vs {exact:.1f}")
    mm1 = max(rel(gb_mean_confirmation_time(l, MU_B, 1), 1 / (MU_B - l))
              for l in np.linspace(1e-5, 0.95 * MU_B, 25))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        light = run_naive_sim(ScenarioConfig(num_witnesses=2).with_rate(1e-3 / K), 1e8, 5)
    light_err = rel(light.mean_gb_sojourn_s, 1 / MU_B)
    ok &= mm1 <= 1e-6 and light_err <= 0.02
    report(5, ok, "; ".join(parts) + f"; b=1 error {mm1:.1e}; lambda_B=1e-3 DES "
                  f"{light.mean_gb_sojourn_s:.1f} s ({light_err:.2%} from 555.6)")


# 6 ------------------------------------------------------------------------

def test_criterion_6_radio(report):
    radio = RadioParams()
    rng = np.random.default_rng(6)
    n = 10**6
    worst = 0.0
    for d in rng.uniform(10.0, 200.0, 10):
        p = outage_probability(d, radio)
        power = mean_received_power_db(d, radio) + rng.normal(0.0, radio.shadow_sigma_db, n)
        est = np.mean(power < 10 * np.log10(radio.sensitivity_w))
        sigma = math.sqrt(max(p * (1 - p), 1e-300) / n)
        worst = max(worst, abs(est - p) / sigma)
    median = outage_probability(median_outage_distance(radio), radio)
    ok = worst <= 3 and abs(median - 0.5) <= 1e-12
    report(6, ok, f"10 distances, worst deviation {worst:.2f} sigma, "
                  f"p_out at median distance {median:.15f}")


# 7 ------------------------------------------------------------------------

def brute_force_attempts(ps, l):
    """Average over every ordering of the witnesses and every outage pattern."""
    v = len(ps)
    out = np.zeros(v)
    orders = list(itertools.permutations(range(v)))
    for order in orders:
        for pattern in itertools.product((True, False), repeat=l):
            prob = 1.0
            for w, success in zip(order, pattern):
                prob *= ps[w] if success else 1 - ps[w]
            for w, success in zip(order, pattern):
                out[w] += prob / len(orders)
                if success:
                    break
    return out


def test_criterion_7_selection(report):
    rng = np.random.default_rng(7)
    worst, worst_acc, cases = 0.0, 0.0, 0
    for v in range(1, 7):
        rows = rng.uniform(0.0, 1.0, (50, v))
        for ps in rows:
            for l in range(1, v + 1):
                exact = attempt_probability_exact(ps, l)
                worst = max(worst, float(np.max(np.abs(exact - brute_force_attempts(ps, l)))))
                fail = 1 - delivery_success_probability(ps, l)
                worst_acc = max(worst_acc, abs(float(exact @ ps) - (1 - fail)))
                cases += 1
        for prof, ps in zip(selection_profiles(rows, v), rows):
            worst_acc = max(worst_acc, abs(float(prof.attempt_prob @ ps) - (1 - prof.fail_prob)))
    ok = worst <= 1e-12 and worst_acc <= 1e-9
    report(7, ok, f"{cases} cases, worst brute-force gap {worst:.1e}, "
                  f"worst accounting gap {worst_acc:.1e}")


# 8 ------------------------------------------------------------------------

def test_criterion_8_properties(report):
    notes = []
    # M/M/1: equal service rates
    mm1 = []
    for rho in (0.1, 0.5, 0.9):
        tau = witness_stationary(rho, 0.3, 1.0, 1.0, tol=1e-12)
        geo = (1 - rho) * rho ** np.arange(len(tau))
        mm1.append(max(np.max(np.abs(tau - geo)),
                       rel(witness_mean_queue(rho, 0.3, 1.0, 1.0).L, rho / (1 - rho))))
    notes.append(f"M/M/1 gap {max(mm1):.1e}")
    ok = max(mm1) <= 1e-9
    scv = min(service_variance_scv(p, a, b)[1] for p in np.linspace(0, 1, 11)
              for a in (0.5, 1, 7) for b in (0.5, 3, 20))
    ok &= scv >= 1 - 1e-12
    notes.append(f"min SCV {scv:.6f}")
    cfg = ScenarioConfig(num_witnesses=3)
    g = ledger_growth(cfg, 1.5)
    ok &= math.isclose(g.gb_tps + 3 * g.local_per_witness_tps, g.naive_tps)
    # one stable DES run for conservation and Little's law
    k, v = 600, 2
    run_cfg = ScenarioConfig(num_witnesses=v, num_devices=k,
                             queue=QueueParams(mu1_tps=2.0, mu2_tps=1.0)).with_rate(1.6 / k)
    args = (run_cfg, balanced(k, v), LinkSuccessMatrix.lossless(k, v), 4e5, 8)
    r = run_wiblock_sim(*args)
    ok &= r.ledger_gb == r.global_count and int(np.sum(r.ledger_local)) == r.local_count
    ok &= r.confirmed_count + r.dropped + r.in_flight == r.generated
    little_w = rel(float(np.sum(r.mean_witness_queue_len)),
                   float(np.sum(r.witness_arrival_rate)) * r.mean_witness_sojourn_s)
    little_b = rel(r.gb_mean_queue_len, r.gb_arrival_rate * r.mean_gb_sojourn_s)
    ok &= little_w <= 0.03 and little_b <= 0.03
    notes.append(f"Little's law gaps {little_w:.2%} / {little_b:.2%}")
    same = run_wiblock_sim(*args).to_json() == r.to_json()
    ok &= same
    notes.append(f"bitwise repeat {'identical' if same else 'DIFFERENT'}")
    report(8, ok, ", ".join(notes))

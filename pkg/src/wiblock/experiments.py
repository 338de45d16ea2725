"""Parameter sweeps that regenerate the evaluation figures as CSV tables.

Every CSV starts with one ``#`` line carrying JSON metadata (experiment name,
config hash, seed and run settings) followed by a normal header row. Each run
also writes the resolved configuration next to its tables, so a file can be
traced back to exactly the inputs that produced it.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytic
from .analytic import analyze_scenario, gb_queue_stats, max_load_naive, max_load_wiblock
from .config import ScenarioConfig, config_hash, emit_config
from .des import SimSpec, replicate, run_naive_sim, run_wiblock_sim
from .errors import DomainError, InvariantViolation, MissingData, WiblockError
from .radio import LinkSuccessMatrix, sample_deployment, success_matrix
from .selection import delivery_success_probability, global_fraction

NAMES = ("fig5", "fig6", "fig7a", "fig7b", "validate", "sweep")
ENGINES = ("analytic", "des")
LINK_MODES = ("lossless", "shadowed")

# axis each figure sweeps, and the grid used when none is given
FIG_AXES = {"fig5": "num_witnesses", "fig6": "num_witnesses",
            "fig7a": "per_device_rate_tps", "fig7b": "block_size"}
DEFAULT_GRIDS = {
    "fig5": tuple(range(2, 11)),
    "fig6": tuple(range(2, 11)),
    "fig7b": tuple(range(250, 2001, 250)),
}
FIG5_DEVICES = tuple(range(100, 1001, 100))
FIG5_CURVES = (2, 4, 8)
FIG7A_CURVES = (2, 3, 4)
FIG7A_POINTS = 18
FIG7A_RANGE = (0.10, 0.95)
FIG7B_HORIZON_S = 24 * 3600.0
FIG7B_TOTAL_RATE_TPS = 1.2

SWEEPABLE = {
    "num_witnesses": int, "num_devices": int, "block_size": int, "retry_limit": int,
    "per_device_rate_tps": float, "block_rate_bps": float, "mu1_tps": float,
    "mu2_tps": float, "shadow_sigma_db": float, "area_side_m": float,
}

TOLERANCES = {"witness_queue_len": 0.03, "witness_sojourn_s": 0.03,
              "gb_arrival_rate": 0.03, "gb_confirmation_s": 0.05, "gb_queue_len": 0.05}


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment run.

    ``sweep_axis`` is ``(parameter, values)``; ``None`` picks the figure's
    default grid. ``links`` chooses between perfect links and links sampled
    from the shadowing model on one deployment.
    """
    name: str
    base: ScenarioConfig
    output_dir: Path
    sweep_axis: tuple | None = None
    engines: frozenset = frozenset({"analytic"})
    seed: int = 0
    reps: int = 1
    horizon_s: float | None = None
    links: str = "lossless"

    def __post_init__(self):
        if self.name not in NAMES:
            raise DomainError(f"unknown experiment {self.name!r}; choose from {NAMES}")
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        engines = frozenset(self.engines)
        if not engines or not engines <= set(ENGINES):
            raise DomainError(f"engines must be a non-empty subset of {ENGINES}")
        object.__setattr__(self, "engines", engines)
        if self.links not in LINK_MODES:
            raise DomainError(f"links must be one of {LINK_MODES}")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if self.horizon_s is not None and not (math.isfinite(self.horizon_s) and self.horizon_s > 0):
            raise DomainError("horizon must be a positive finite time")
        if self.sweep_axis is not None:
            axis, values = self.sweep_axis
            want = FIG_AXES.get(self.name)
            if want is not None and axis != want:
                raise DomainError(f"{self.name} sweeps {want}, not {axis}")
            if axis not in SWEEPABLE:
                raise DomainError(f"cannot sweep {axis!r}; choose from {sorted(SWEEPABLE)}")
            values = tuple(SWEEPABLE[axis](x) for x in values)
            if not values:
                raise DomainError("sweep needs at least one value")
            for x in values:
                _apply(self.base, axis, x)  # raises on out-of-range values
            object.__setattr__(self, "sweep_axis", (axis, values))
        elif self.name == "sweep":
            raise DomainError("the sweep experiment needs an axis")

    def grid(self):
        if self.sweep_axis is not None:
            return self.sweep_axis[1]
        return DEFAULT_GRIDS.get(self.name)


@dataclass
class ExperimentOutput:
    files: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 2 if self.failures else 0


def _apply(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Copy of ``cfg`` with one parameter changed (validated by the dataclasses)."""
    import dataclasses as dc
    if axis == "num_witnesses":
        return cfg.with_witnesses(value)
    if axis == "block_size":
        if value < 1:
            raise InvariantViolation("block_size", f"must be >= 1, got {value}")
        return cfg.with_block_size(value)
    if axis == "per_device_rate_tps":
        return cfg.with_rate(value)
    if axis == "retry_limit":
        return dc.replace(cfg, traffic=dc.replace(cfg.traffic, retry_limit=value))
    if axis in ("block_rate_bps", "mu1_tps", "mu2_tps"):
        return dc.replace(cfg, queue=dc.replace(cfg.queue, **{axis: value}))
    if axis == "shadow_sigma_db":
        return dc.replace(cfg, radio=dc.replace(cfg.radio, shadow_sigma_db=value))
    return dc.replace(cfg, **{axis: value})


# --------------------------------------------------------------------------
# output helpers

def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_table(path: Path, meta: dict, columns: list, rows: list):
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    _atomic_write(path, buf.getvalue())
    return path


def read_table(path) -> tuple[dict, list, list]:
    """Inverse of :func:`write_table`: (metadata, columns, rows as string dicts)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise MissingData(f"{path} has no metadata header")
        meta = json.loads(first[1:])
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [dict(zip(columns, r)) for r in reader]
    return meta, columns, rows


class _Run:
    """Shared state for one experiment: provenance metadata and failure log."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.out = ExperimentOutput()
        self.meta = {
            "experiment": spec.name,
            "config_hash": config_hash(spec.base),
            "seed": spec.seed,
            "engines": sorted(spec.engines),
            "links": spec.links,
            "reps": spec.reps,
            "horizon_s": spec.horizon_s,
        }

    def table(self, stem, columns, rows, **extra):
        meta = dict(self.meta, table=stem, **extra)
        path = self.spec.output_dir / f"{stem}.csv"
        self.out.files.append(write_table(path, meta, columns, rows))

    def fail(self, point, exc):
        self.out.failures.append({"point": point, "error": type(exc).__name__,
                                  "message": str(exc)})

    def finish(self):
        spec = self.spec
        d = spec.output_dir
        cfg_path = d / f"{spec.name}.config.ini"
        _atomic_write(cfg_path, emit_config(spec.base))
        prov = dict(self.meta, failures=self.out.failures,
                    sweep_axis=None if spec.sweep_axis is None
                    else [spec.sweep_axis[0], list(spec.sweep_axis[1])],
                    files=sorted(p.name for p in self.out.files))
        prov_path = d / f"{spec.name}.provenance.json"
        _atomic_write(prov_path, json.dumps(prov, indent=2, sort_keys=True, default=str) + "\n")
        self.out.files += [cfg_path, prov_path]
        return self.out


def _point_seed(seed, *key) -> np.random.SeedSequence:
    """Seed for one sweep point, derived from the run seed and the point identity."""
    digest = hashlib.sha256(json.dumps([repr(k) for k in key]).encode()).digest()
    return np.random.SeedSequence([seed, int.from_bytes(digest[:8], "little")])


def _links_for(spec: ExperimentSpec, cfg: ScenarioConfig, *key):
    dep = sample_deployment(cfg, _point_seed(spec.seed, "deployment", *key))
    if spec.links == "lossless":
        return dep, LinkSuccessMatrix.lossless(cfg.num_devices, cfg.num_witnesses)
    return dep, success_matrix(dep, cfg.radio, cfg.distance_floor_m)


def _simulate(spec: ExperimentSpec, sim: SimSpec, *key) -> dict:
    """Scalar DES outputs (mean, half-width) for one point, replicated if asked."""
    if spec.reps >= 2:
        base = int(_point_seed(spec.seed, "des", *key).generate_state(1)[0])
        agg = replicate(sim, spec.reps, base)
        return {"mean": agg.mean, "ci": agg.half_width, "unstable": agg.unstable,
                "runs": agg.runs}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = sim.run(_point_seed(spec.seed, "des", *key))
    ci = {k: v for k, v in res.ci95.items() if not isinstance(v, list)}
    return {"mean": res.scalars(), "ci": ci, "unstable": not res.stable, "runs": [res]}


def _rate_for_gb_load(cfg: ScenarioConfig, links, load: float) -> float:
    """Per-device rate giving a chain utilisation of ``load``."""
    unit = analyze_scenario(cfg.with_rate(1.0), links=links)
    lam_B_per_unit = float(unit.gb.lambda_B)
    return load * cfg.queue.block_size * cfg.queue.block_rate_bps / lam_B_per_unit


# --------------------------------------------------------------------------
# figures

def _fig5(spec: ExperimentSpec, run: _Run):
    cfg, q = spec.base, spec.base.queue
    k, b, mu = cfg.num_devices, q.block_size, q.block_rate_bps
    rows = []
    for v in spec.grid():
        row = {"v": v, "naive_tps": max_load_naive(k, b, mu)}
        try:
            row["wiblock_tps"] = max_load_wiblock(k, v, b, mu)
            row["gain"] = row["wiblock_tps"] / row["naive_tps"]
        except WiblockError as exc:
            run.fail({"v": v}, exc)
        rows.append(row)
    run.table("fig5", ["v", "naive_tps", "wiblock_tps", "gain"], rows, k=k)
    rows = []
    for kk in FIG5_DEVICES:
        row = {"k": kk, "naive_tps": max_load_naive(kk, b, mu)}
        for v in FIG5_CURVES:
            row[f"wiblock_v{v}_tps"] = max_load_wiblock(kk, v, b, mu)
        rows.append(row)
    run.table("fig5_vs_k", ["k", "naive_tps"] + [f"wiblock_v{v}_tps" for v in FIG5_CURVES], rows)


def binomial_half_width(p: float, n: int) -> float:
    """95% normal-approximation half-width for a proportion ``p`` over ``n`` trials."""
    return 1.959963984540054 * math.sqrt(p * (1.0 - p) / n) if n else math.nan


def _fig6(spec: ExperimentSpec, run: _Run):
    rows = []
    des = "des" in spec.engines
    for v in spec.grid():
        row = {"v": v}
        try:
            cfg = spec.base.with_witnesses(v)
            fw = 1.0 / v
            row["fraction_gb"] = global_fraction(v)
            row["fraction_witness"] = fw
            if des:
                row.update(_fig6_des(spec, cfg))
        except (WiblockError, ValueError) as exc:
            run.fail({"v": v}, exc)
        rows.append(row)
    columns = ["v", "fraction_gb", "fraction_witness"]
    if des:
        columns += ["des_fraction_gb", "des_ci95", "des_classified", "des_confirmed", "des_pass"]
    run.table("fig6", columns, rows)


def _fig6_des(spec, cfg):
    """Empirical split at half the chain capacity, with a horizon giving >= 1e5 confirmations."""
    dep, links = _links_for(spec, cfg, "fig6", cfg.num_witnesses)
    lam = _rate_for_gb_load(cfg, links, 0.5)
    cfg = cfg.with_rate(lam)
    horizon = spec.horizon_s or 1.25e5 / (cfg.num_devices * lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = run_wiblock_sim(cfg, dep, links, horizon, _point_seed(spec.seed, "fig6", cfg.num_witnesses))
    n = res.classified_global + res.classified_local
    p = global_fraction(cfg.num_witnesses)
    h = binomial_half_width(p, n)
    return {"des_fraction_gb": res.global_fraction, "des_ci95": h, "des_classified": n,
            "des_confirmed": res.confirmed_count,
            "des_pass": abs(res.global_fraction - p) <= h}


def fig7a_grid(k, b, mu_B, curves=FIG7A_CURVES, points=FIG7A_POINTS, delta=1.0):
    """Union of per-curve grids, each spanning 10%..95% of that curve's stability bound."""
    bounds = {"naive": max_load_naive(k, b, mu_B)}
    for v in curves:
        bounds[f"v{v}"] = max_load_wiblock(k, v, b, mu_B) / delta
    grid = set()
    for bound in bounds.values():
        # rounding merges points shared by several curves
        grid.update(float(f"{x:.12g}") for x in np.linspace(*FIG7A_RANGE, points) * bound)
    return sorted(grid), bounds


def _fig7a(spec: ExperimentSpec, run: _Run):
    cfg = spec.base
    q = cfg.queue
    k, b, mu = cfg.num_devices, q.block_size, q.block_rate_bps
    delta = 1.0
    if spec.links == "shadowed":
        delta = analytic.mean_delivery_fraction(cfg.with_witnesses(FIG7A_CURVES[-1]))
    grid = spec.grid() if spec.sweep_axis else fig7a_grid(k, b, mu)[0]
    des = "des" in spec.engines
    curves = ["naive"] + [f"v{v}" for v in FIG7A_CURVES]
    links = {}
    for v in FIG7A_CURVES:
        links[v] = _links_for(spec, cfg.with_witnesses(v), "fig7a", v)
    rows = []
    for lam in grid:
        row = {"lambda_tps": lam}
        # naive: every generated transaction reaches the chain
        try:
            st = gb_queue_stats(k * lam, mu, b)
            row["naive_T_s"] = st.mean_confirmation_s if st.stable else math.nan
            row["naive_util"] = st.utilization
        except (WiblockError, ValueError) as exc:
            run.fail({"lambda_tps": lam, "curve": "naive"}, exc)
        for v in FIG7A_CURVES:
            c = cfg.with_witnesses(v).with_rate(lam)
            try:
                if spec.links == "lossless":
                    a = analyze_scenario(c, delivery_fraction=1.0)
                else:
                    a = analyze_scenario(c, links=links[v][1])
                row[f"v{v}_T_s"] = a.gb.mean_confirmation_s if a.gb.stable else math.nan
                row[f"v{v}_util"] = a.gb.utilization
            except (WiblockError, ValueError) as exc:
                run.fail({"lambda_tps": lam, "v": v}, exc)
        if des:
            _fig7a_des(spec, run, row, lam, links)
        rows.append(row)
    columns = ["lambda_tps"]
    for name in curves:
        columns += [f"{name}_T_s", f"{name}_util"]
        if des:
            columns += [f"des_{name}_T_s", f"des_{name}_ci95"]
    run.table("fig7a", columns, rows, delivery_fraction=delta)


def _fig7a_des(spec, run, row, lam, links):
    cfg = spec.base
    horizon = spec.horizon_s or 2.0e6
    jobs = [("naive", SimSpec(cfg.with_witnesses(FIG7A_CURVES[0]).with_rate(lam), horizon, "naive"))]
    for v in FIG7A_CURVES:
        dep, ls = links[v]
        jobs.append((f"v{v}", SimSpec(cfg.with_witnesses(v).with_rate(lam), horizon, "wiblock",
                                      dep, ls)))
    for name, sim in jobs:
        if not math.isfinite(row.get(f"{name}_T_s", math.nan)):
            continue
        try:
            out = _simulate(spec, sim, "fig7a", name, lam)
            row[f"des_{name}_T_s"] = out["mean"]["mean_gb_sojourn_s"]
            row[f"des_{name}_ci95"] = out["ci"].get("mean_gb_sojourn_s", math.nan)
        except (WiblockError, ValueError) as exc:
            run.fail({"lambda_tps": lam, "curve": name}, exc)


def _fig7b(spec: ExperimentSpec, run: _Run):
    cfg = spec.base.with_witnesses(2) if spec.base.num_witnesses != 2 else spec.base
    if cfg.traffic.per_device_rate_tps is None:
        cfg = cfg.with_rate(FIG7B_TOTAL_RATE_TPS / cfg.num_devices)
    lam = cfg.per_device_rate_tps
    k, v = cfg.num_devices, cfg.num_witnesses
    H = spec.horizon_s or FIG7B_HORIZON_S
    des = "des" in spec.engines
    p = global_fraction(v)
    # one deployment per replication, shared by every block size
    deployments = [_links_for(spec, cfg, "fig7b", r) for r in range(spec.reps)]
    delta = 1.0 if spec.links == "lossless" else float(np.mean(
        [delivery_success_probability(ls.p_s, cfg.retry_limit) for _, ls in deployments]))
    rows = []
    for b in spec.grid():
        c = cfg.with_block_size(b)
        mu = c.queue.block_rate_bps
        row = {"b": b}
        # analytic ledger growth: arrivals, capped by chain throughput when unstable
        cap = b * mu
        naive_rate = min(k * lam, cap)
        gb_rate = min(k * lam * delta * p, cap)
        row["naive_stable"] = k * lam < cap
        row["wiblock_stable"] = k * lam * delta * p < cap
        row["naive_ledger"] = H * naive_rate
        row["gb_ledger"] = H * gb_rate
        row["local_ledger_per_witness"] = H * k * lam * delta * (1.0 - p) / v
        row["gb_ratio"] = row["gb_ledger"] / row["naive_ledger"]
        row["local_ratio"] = row["local_ledger_per_witness"] / row["naive_ledger"]
        if des:
            try:
                row.update(_fig7b_des(spec, c, H, b, deployments))
            except (WiblockError, ValueError) as exc:
                run.fail({"b": b}, exc)
        rows.append(row)
    columns = ["b", "naive_stable", "wiblock_stable", "naive_ledger", "gb_ledger",
               "local_ledger_per_witness", "gb_ratio", "local_ratio"]
    if des:
        columns += ["des_reps", "des_naive_ledger", "des_gb_ledger", "des_local_ledger_mean"]
        columns += [f"des_local_ledger_w{w}" for w in range(v)]
        columns += ["des_gb_ratio", "des_local_ratio"]
    run.table("fig7b", columns, rows, per_device_rate_tps=lam, horizon_s=H, v=v)


def _fig7b_des(spec, cfg, H, b, deployments):
    """Ledger counts over the horizon, averaged per witness index over replications."""
    v = cfg.num_witnesses
    naive, gb, local = [], [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for r, (dep, links) in enumerate(deployments):
            naive.append(run_naive_sim(cfg, H, _point_seed(spec.seed, "fig7b-naive", b, r)).ledger_gb)
            wib = run_wiblock_sim(cfg, dep, links, H, _point_seed(spec.seed, "fig7b", b, r))
            gb.append(wib.ledger_gb)
            local.append(wib.ledger_local)
    n_naive, n_gb = float(np.mean(naive)), float(np.mean(gb))
    per_witness = np.mean(local, axis=0)
    out = {"des_reps": len(deployments), "des_naive_ledger": n_naive, "des_gb_ledger": n_gb,
           "des_local_ledger_mean": float(np.mean(per_witness)),
           "des_gb_ratio": n_gb / n_naive,
           "des_local_ratio": float(np.mean(per_witness)) / n_naive}
    for w in range(v):
        out[f"des_local_ledger_w{w}"] = float(per_witness[w])
    return out


# --------------------------------------------------------------------------
# analytic vs simulation

def validation_rows(cfg: ScenarioConfig, dep, links, res_mean, res_ci, n_classified):
    """Compare analytic predictions with simulated means for one scenario."""
    a = analyze_scenario(cfg, links=links)
    p = a.p_global
    rows = []

    def add(quantity, exact, sim, ci, tol, rule="relative"):
        err = (sim - exact) / exact if exact else math.nan
        if rule == "ci":
            ok = abs(sim - exact) <= ci
        else:
            ok = abs(sim - exact) <= tol * abs(exact)
        rows.append({"quantity": quantity, "analytic": exact, "des": sim, "des_ci95": ci,
                     "rel_err": err, "tolerance": tol, "rule": rule, "pass": bool(ok)})

    add("global_fraction", p, res_mean["global_fraction"],
        binomial_half_width(p, n_classified), math.nan, "ci")
    active = [s for s in a.witness if s is not None and s.lambda_w > 0]
    if len(active) == len(a.witness):
        L = float(np.mean([s.L for s in a.witness]))
        add("witness_queue_len", L, res_mean["mean_witness_queue_len_pooled"],
            res_ci.get("mean_witness_queue_len_pooled", math.nan), TOLERANCES["witness_queue_len"])
        W = float(np.sum([s.L for s in a.witness]) / np.sum(a.lambda_w))
        add("witness_sojourn_s", W, res_mean["mean_witness_sojourn_s"],
            res_ci.get("mean_witness_sojourn_s", math.nan), TOLERANCES["witness_sojourn_s"])
    add("gb_arrival_rate", a.gb.lambda_B, res_mean["gb_arrival_rate"], math.nan,
        TOLERANCES["gb_arrival_rate"])
    if a.gb.stable:
        add("gb_confirmation_s", a.gb.mean_confirmation_s, res_mean["mean_gb_sojourn_s"],
            res_ci.get("mean_gb_sojourn_s", math.nan), TOLERANCES["gb_confirmation_s"])
        add("gb_queue_len", a.gb.mean_queue_len, res_mean["gb_mean_queue_len"],
            res_ci.get("gb_mean_queue_len", math.nan), TOLERANCES["gb_queue_len"])
    return rows


def _validate(spec: ExperimentSpec, run: _Run):
    cfg = spec.base
    dep, links = _links_for(spec, cfg, "validate")
    if cfg.traffic.per_device_rate_tps is None:
        cfg = cfg.with_rate(_rate_for_gb_load(cfg, links, 0.5))
    horizon = spec.horizon_s or 1.0e7
    sim = SimSpec(cfg, horizon, "wiblock", dep, links)
    out = _simulate(spec, sim, "validate")
    n = int(sum(r.classified_global + r.classified_local for r in out["runs"]))
    rows = validation_rows(cfg, dep, links, out["mean"], out["ci"], n)
    for row in rows:
        if not row["pass"]:
            run.fail({"quantity": row["quantity"]},
                     DomainError(f"analytic {row['analytic']:.6g} vs DES {row['des']:.6g}"))
    run.table("validate", ["quantity", "analytic", "des", "des_ci95", "rel_err", "tolerance",
                           "rule", "pass"], rows,
              per_device_rate_tps=cfg.per_device_rate_tps, horizon_s=horizon,
              num_witnesses=cfg.num_witnesses)


def _sweep(spec: ExperimentSpec, run: _Run):
    axis, values = spec.sweep_axis
    des = "des" in spec.engines
    rows = []
    for x in values:
        row = {axis: x}
        try:
            cfg = _apply(spec.base, axis, x)
            dep, links = _links_for(spec, cfg, "sweep", x)
            a = analyze_scenario(cfg, links=links)
            q = cfg.queue
            row.update(lambda_B=a.gb.lambda_B, gb_util=a.gb.utilization, gb_stable=a.gb.stable,
                       gb_T_s=a.gb.mean_confirmation_s, end_to_end_s=a.end_to_end_s,
                       max_load_naive_tps=max_load_naive(cfg.num_devices, q.block_size,
                                                         q.block_rate_bps))
            Ls = [s.L for s in a.witness if s is not None]
            row["witness_L_mean"] = float(np.mean(Ls)) if len(Ls) == len(a.witness) else math.inf
            if cfg.num_witnesses >= 2:
                row["max_load_wiblock_tps"] = max_load_wiblock(
                    cfg.num_devices, cfg.num_witnesses, q.block_size, q.block_rate_bps)
            if des:
                horizon = spec.horizon_s or 1.0e6
                out = _simulate(spec, SimSpec(cfg, horizon, "wiblock", dep, links), "sweep", x)
                row["des_gb_T_s"] = out["mean"]["mean_gb_sojourn_s"]
                row["des_gb_T_ci95"] = out["ci"].get("mean_gb_sojourn_s", math.nan)
                row["des_witness_L_mean"] = out["mean"]["mean_witness_queue_len_pooled"]
                row["des_unstable"] = out["unstable"]
        except (WiblockError, ValueError) as exc:
            run.fail({axis: x}, exc)
        rows.append(row)
    columns = [axis, "lambda_B", "gb_util", "gb_stable", "gb_T_s", "witness_L_mean",
               "end_to_end_s", "max_load_naive_tps", "max_load_wiblock_tps"]
    if des:
        columns += ["des_gb_T_s", "des_gb_T_ci95", "des_witness_L_mean", "des_unstable"]
    run.table("sweep", columns, rows, axis=axis)


_RUNNERS = {"fig5": _fig5, "fig6": _fig6, "fig7a": _fig7a, "fig7b": _fig7b,
            "validate": _validate, "sweep": _sweep}


def run_experiment(spec: ExperimentSpec) -> ExperimentOutput:
    """Run one experiment and write its tables, resolved config and provenance record.

    Failures at individual points are collected in ``failures`` (and the
    provenance file) while the remaining points are still written.
    """
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(spec)
    _RUNNERS[spec.name](spec, run)
    return run.finish()


# --------------------------------------------------------------------------
# rendering

def _pretty(text: str) -> str:
    try:
        x = float(text)
    except ValueError:
        return text
    if text.lstrip("-").isdigit():
        return text
    if not math.isfinite(x):
        return text
    return f"{x:.6g}"


def render_tables(output_dir) -> str:
    """Aligned text rendering of every result table plus a JSON index of the files.

    Writes ``summary.txt`` and ``index.json`` into ``output_dir`` and returns
    the summary. Output is a pure function of the tables present.
    """
    d = Path(output_dir)
    tables = sorted(p for p in d.glob("*.csv")) if d.is_dir() else []
    if not tables:
        raise MissingData(f"no result tables in {d}")
    parts, index = [], []
    for path in tables:
        meta, columns, rows = read_table(path)
        cells = [[_pretty(r.get(c, "")) for c in columns] for r in rows]
        widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
        lines = [f"== {path.name} ({meta.get('experiment')}, config {meta.get('config_hash')}, "
                 f"seed {meta.get('seed')})",
                 "  ".join(c.rjust(w) for c, w in zip(columns, widths))]
        lines += ["  ".join(x.rjust(w) for x, w in zip(r, widths)) for r in cells]
        parts.append("\n".join(lines))
        index.append({"file": path.name, "rows": len(rows), "columns": columns,
                      "sha256": hashlib.sha256(path.read_bytes()).hexdigest(), "meta": meta})
    others = sorted(p.name for p in d.iterdir()
                    if p.suffix in (".ini", ".json") and p.name != "index.json")
    summary = "\n\n".join(parts) + "\n"
    _atomic_write(d / "summary.txt", summary)
    _atomic_write(d / "index.json",
                  json.dumps({"tables": index, "other_files": others}, indent=2,
                             sort_keys=True) + "\n")
    return summary

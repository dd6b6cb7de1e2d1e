"""Experiment drivers behind the CLI: static census, dynamic traces, theory tables."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import theory
from .graph import Graph, component_census, connected_components, snapshot_connectivity
from .geometry import pairs_within
from .mobility import WorldConfig, WorldState, init_world, run
from .stats import (CONNECTED, DISCONNECTED, Aggregate, batch_means_se, classify_masks, correlations,
                    mean_ci, mean_se, poisson_fit, record_connectivity)

MODES = ("static-census", "dynamic-run", "q-table", "theory", "validate")
DEFAULT_RATIOS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)

STATIC_COLUMNS = ["trial", "connected", "k1", "k2", "k_prime_2", "k_tilde_2", "largest_size",
                  "component_count", "non_embeddable"]
DYNAMIC_COLUMNS = ["t", "connected", "k1", "b", "d", "s"]
THEORY_COLUMNS = ["n", "r", "s", "mu", "q_exact", "q_asymptotic", "regime", "qn", "E_B", "E_S",
                  "p_cc", "p_cd", "p_dd", "EL_C", "EL_D", "q_method"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "theory"
    n: Any = 2000
    mu: Any = None
    r: Optional[float] = None
    s: Optional[float] = None
    target_qn: Optional[float] = None
    m: int = 10
    trials: int = 1
    steps: int = 10_000
    epsilon: float = 0.25
    ell_max: int = 4
    seed: int = 0
    output_path: Optional[str] = None
    format: str = "csv"
    tolerances: dict = field(default_factory=dict)
    ratios: list = field(default_factory=lambda: list(DEFAULT_RATIOS))
    q_samples: int = theory.DEFAULT_MC_SAMPLES
    plots: bool = True
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.r is not None and self.mu is not None:
            raise ConfigError("give either r or mu, not both")
        if self.s is not None and self.target_qn is not None:
            raise ConfigError("give either s or target_qn, not both")
        if self.mode in ("dynamic-run", "theory") and self.s is None and self.target_qn is None:
            raise ConfigError(f"{self.mode} needs s or target_qn")
        if self.mode not in ("q-table",) and isinstance(self.n, (list, tuple)):
            raise ConfigError("several n values are only accepted by q-table")
        if self.trials < 1 or self.steps < 0 or self.m < 1:
            raise ConfigError("trials >= 1, steps >= 0 and m >= 1 required")
        if not 0 < self.epsilon < 0.5:
            raise ConfigError("epsilon must lie in (0, 1/2)")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")

    def radius(self, n: int, mu: Optional[float] = None) -> float:
        if self.r is not None:
            return float(self.r)
        return theory.radius_for_mu(n, 1.0 if mu is None else mu)

    def resolve(self) -> dict:
        """Single-point parameters (n, mu, r, s) derived from the knobs given."""
        self.validate()
        n = int(self.n)
        mu_knob = None if self.mu is None else float(self.mu)
        r = self.radius(n, mu_knob)
        if self.target_qn is not None:
            s = theory.invert_qn(n, r, float(self.target_qn), samples=self.q_samples, seed=self.seed)
        else:
            s = None if self.s is None else float(self.s)
        return {"n": n, "r": r, "mu": theory.mu_of(n, r), "s": s}


@dataclass
class Report:
    kind: str
    columns: list
    rows: list
    summary: dict
    extras: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        return rows_to_csv(self.columns, self.rows)

    def json_text(self) -> str:
        return json.dumps(jsonable(self.summary), indent=2) + "\n"


# ---------------------------------------------------------------- serialization


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{float(value):.9g}"
    return str(value)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.9g}")
    if hasattr(obj, "__dataclass_fields__"):
        return jsonable(asdict(obj))
    return obj


# ---------------------------------------------------------------- static


def static_trial(n: int, r: float, seed: int, trial: int, epsilon: float, ell_max: int) -> dict:
    world = init_world(WorldConfig(n=n, r=r, s=0.0, m=1, seed=seed), trial)
    pts = world.points
    ei, ej = pairs_within(pts, r)
    g = Graph.from_pairs(n, r, ei, ej)
    lab = connected_components(g)
    census = component_census(pts, lab, r, epsilon=epsilon, ell_max=ell_max, graph=g)
    return {
        "trial": trial,
        "connected": lab.component_count <= 1,
        "k1": census.k1,
        "k2": census.k_ell.get(2, 0),
        "k_prime_2": census.k_prime.get(2, 0),
        "k_tilde_2": census.k_tilde_ell.get(2, 0),
        "largest_size": census.largest_size,
        "component_count": lab.component_count,
        "non_embeddable": census.non_embeddable_count,
        "_census": census,
    }


def _static_chunk(args):
    n, r, seed, lo, hi, epsilon, ell_max = args
    rows = [static_trial(n, r, seed, t, epsilon, ell_max) for t in range(lo, hi)]
    for row in rows:
        c = row.pop("_census")
        row["_k_ell"] = {ell: c.k_ell.get(ell, 0) for ell in range(1, ell_max + 1)}
        row["_k_prime"] = dict(c.k_prime)
        row["_k_tilde"] = dict(c.k_tilde_ell)
    return rows


def static_trials(n, r, seed, trials, epsilon=0.25, ell_max=4, workers=1) -> list[dict]:
    chunk = max(1, min(500, trials // max(1, 4 * workers)))
    jobs = [(n, r, seed, lo, min(trials, lo + chunk), epsilon, ell_max) for lo in range(0, trials, chunk)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_static_chunk, jobs))
    else:
        parts = [_static_chunk(j) for j in jobs]
    return [row for part in parts for row in part]


def summarize_static(rows, n, r, epsilon, ell_max) -> dict:
    mu = theory.mu_of(n, r)
    conn = Aggregate()
    k1 = Aggregate()
    for row in rows:
        conn.add(int(row["connected"]))
        k1.add(row["k1"])
    pc, pc_half = mean_ci(conn)
    fit = poisson_fit(k1, mu)
    census = {}
    for key in ("_k_ell", "_k_prime", "_k_tilde"):
        census[key[1:]] = {ell: float(np.mean([row[key][ell] for row in rows])) for ell in range(1, ell_max + 1)}
    census["pr_k_tilde_positive"] = {
        ell: float(np.mean([row["_k_tilde"][ell] > 0 for row in rows])) for ell in range(1, ell_max + 1)}
    poisson_bins = [math.exp(-mu), mu * math.exp(-mu), mu * mu / 2 * math.exp(-mu)]
    poisson_bins.append(1.0 - sum(poisson_bins))
    return {
        "trials": len(rows),
        "pr_connected": pc,
        "pr_connected_ci95": pc_half,
        "ci_available": not math.isnan(pc_half),
        "pr_k1_zero": float(np.mean([row["k1"] == 0 for row in rows])),
        "theory_pr_connected": math.exp(-mu),
        "k1_mean": k1.mean,
        "k1_variance": k1.variance,
        "k1_histogram": dict(sorted(k1.histogram.items())),
        "k1_poisson": asdict(fit),
        "theory_poisson_bins_0_1_2_ge3": poisson_bins,
        "census_means": census,
        "epsilon": epsilon,
        "solitary_proxy": "largest component excluded from K~",
    }


def run_static_experiment(config: ExperimentConfig) -> Report:
    if config.mode != "static-census":
        raise ConfigError("run_static_experiment needs mode=static-census")
    p = config.resolve()
    rows = static_trials(p["n"], p["r"], config.seed, config.trials, config.epsilon, config.ell_max,
                         config.workers)
    summary = {"config": resolved_config(config, p)}
    summary.update(summarize_static(rows, p["n"], p["r"], config.epsilon, config.ell_max))
    public = [{k: v for k, v in row.items() if not k.startswith("_")} for row in rows]
    return Report("static-census", STATIC_COLUMNS, public, summary)


# ---------------------------------------------------------------- dynamic


class TraceRecorder:
    """Observer collecting per-step connectivity and isolated-vertex turnover.

    The snapshot of the ``after`` state is cached and reused as the next
    ``before``, so each time step is analysed once.
    """

    def __init__(self, r: float, check_identities: bool = True):
        self.r = r
        self.check_identities = check_identities
        self.connected: list[bool] = []
        self.k1: list[int] = []
        self.b: list[int] = []
        self.d: list[int] = []
        self.s: list[int] = []
        self.violations = 0
        self._last = None

    def _snap(self, state: WorldState):
        return snapshot_connectivity(state.x, state.y, self.r)

    def __call__(self, before: WorldState, after: WorldState) -> None:
        if self._last is None:
            self._last = self._snap(before)
            self.connected.append(self._last[1])
            self.k1.append(int(self._last[0].sum()))
        iso_b = self._last[0]
        iso_a, conn_a = self._snap(after)
        b, d, s = classify_masks(iso_b, iso_a)
        k1_after = int(iso_a.sum())
        if self.check_identities and (self.k1[-1] != d + s or k1_after != s + b):
            self.violations += 1
        self.b.append(b)
        self.d.append(d)
        self.s.append(s)
        self.connected.append(conn_a)
        self.k1.append(k1_after)
        self._last = (iso_a, conn_a)


@dataclass
class Trace:
    connected: np.ndarray
    k1: np.ndarray
    b: np.ndarray
    d: np.ndarray
    s: np.ndarray
    violations: int


def simulate_trace(world_config: WorldConfig, steps: int, trial: int = 0) -> Trace:
    rec = TraceRecorder(world_config.r)
    final = run(world_config, steps, rec, trial=trial)
    if steps == 0:
        iso, conn = snapshot_connectivity(final.x, final.y, world_config.r)
        rec.connected.append(conn)
        rec.k1.append(int(iso.sum()))
    return Trace(np.array(rec.connected, dtype=bool), np.array(rec.k1), np.array(rec.b, dtype=np.int64),
                 np.array(rec.d, dtype=np.int64), np.array(rec.s, dtype=np.int64), rec.violations)


def period_summary(periods, kind) -> dict:
    lengths = [p.length for p in periods if p.kind == kind and p.complete]
    agg = Aggregate()
    agg.extend(lengths)
    mean, half = mean_ci(agg)
    return {"count": agg.count, "mean": mean, "ci95": half,
            "se": half / 1.96 if not math.isnan(half) else math.nan,
            "censored": sum(1 for p in periods if p.kind == kind and not p.complete)}


def connectivity_summary(c: np.ndarray) -> dict:
    """Joint transition frequencies, period records and renewal ratio of a boolean series."""
    out = {}
    if len(c) > 1:
        pairs = {"cc": c[:-1] & c[1:], "cd": c[:-1] & ~c[1:], "dc": ~c[:-1] & c[1:], "dd": ~c[:-1] & ~c[1:]}
        out["joint"] = {k: float(v.mean()) for k, v in pairs.items()}
        out["joint_counts"] = {k: int(v.sum()) for k, v in pairs.items()}
        # indicator series are autocorrelated, so use batch means for the SEs
        out["joint_se"] = {k: batch_means_se(v)[1] for k, v in pairs.items()}
        out["se_cd_minus_dc"] = batch_means_se(pairs["cd"].astype(float) - pairs["dc"])[1]
    periods = record_connectivity(c)
    out["periods"] = {CONNECTED: period_summary(periods, CONNECTED),
                      DISCONNECTED: period_summary(periods, DISCONNECTED)}
    out["pr_connected"] = float(c.mean())
    steps_connected = int(c.sum())
    dc = out.get("joint_counts", {}).get("dc", 0)
    out["steps_connected"] = steps_connected
    out["renewal_ratio"] = steps_connected / dc if dc else math.inf
    return out


def summarize_trace(tr: Trace) -> dict:
    """Empirical B/D/S means and connectivity statistics of one trace.

    The ``k1_zero_proxy`` block repeats the connectivity statistics with
    "connected" replaced by "no isolated vertex". The two coincide only
    asymptotically; at desk-scale n small non-isolated components (mostly
    isolated pairs) make them differ noticeably.
    """
    steps = len(tr.b)
    out = {"steps": steps, "identity_violations": tr.violations}
    for name, series in (("B", tr.b), ("D", tr.d), ("S", tr.s)):
        mean, se = batch_means_se(series) if steps else (math.nan, math.nan)
        out[f"mean_{name}"] = mean
        out[f"se_{name}"] = se
    if steps:
        out["mean_B_minus_D"], out["se_B_minus_D"] = batch_means_se(tr.b - tr.d)
        out["correlations"] = correlations({"B": tr.b, "D": tr.d, "S": tr.s})
    out.update(connectivity_summary(tr.connected))
    out["k1_zero_proxy"] = connectivity_summary(tr.k1 == 0)
    return out


def run_dynamic_experiment(config: ExperimentConfig) -> Report:
    if config.mode != "dynamic-run":
        raise ConfigError("run_dynamic_experiment needs mode=dynamic-run")
    p = config.resolve()
    wc = WorldConfig(n=p["n"], r=p["r"], s=p["s"], m=config.m, seed=config.seed)
    traces = [simulate_trace(wc, config.steps, trial) for trial in range(config.trials)]
    rows = []
    for trial, tr in enumerate(traces):
        for t in range(len(tr.connected)):
            row = {"t": t, "connected": tr.connected[t], "k1": tr.k1[t]}
            if t < len(tr.b):
                row.update(b=tr.b[t], d=tr.d[t], s=tr.s[t])
            if config.trials > 1:
                row["trial"] = trial
            rows.append(row)
    columns = (["trial"] if config.trials > 1 else []) + DYNAMIC_COLUMNS
    merged = traces[0] if len(traces) == 1 else Trace(
        np.concatenate([t.connected for t in traces]), np.concatenate([t.k1 for t in traces]),
        np.concatenate([t.b for t in traces]), np.concatenate([t.d for t in traces]),
        np.concatenate([t.s for t in traces]), sum(t.violations for t in traces))
    summary = {"config": resolved_config(config, p)}
    if len(traces) == 1:
        summary["empirical"] = summarize_trace(merged)
    else:
        summary["empirical_per_trace"] = [summarize_trace(t) for t in traces]
    summary["theory"] = theory.predict(p["n"], p["r"], p["s"], samples=config.q_samples,
                                       seed=config.seed).as_dict()
    return Report("dynamic-run", columns, rows, summary, extras={"traces": traces})


# ---------------------------------------------------------------- theory tables


def theory_row(n: int, r: float, s: float, samples: int, seed: int) -> dict:
    try:
        pred = theory.predict(n, r, s, samples=samples, seed=seed)
    except theory.QuadratureError:
        return {"n": n, "r": r, "s": s, "mu": theory.mu_of(n, r), "q_method": "failed"}
    return {
        "n": n, "r": r, "s": s, "mu": pred.mu, "q_exact": pred.q, "q_asymptotic": pred.q_asymptotic,
        "regime": pred.regime, "qn": pred.qn, "E_B": pred.expected_b, "E_S": pred.expected_s,
        "p_cc": pred.p_cc, "p_cd": pred.p_cd, "p_dd": pred.p_dd, "EL_C": pred.el_c, "EL_D": pred.el_d,
        "q_method": pred.q_method, "_p_dc": pred.p_dc, "_q_stderr": pred.q_stderr,
    }


def emit_theory_table(config: ExperimentConfig) -> Report:
    if config.mode not in ("theory", "q-table"):
        raise ConfigError("emit_theory_table needs mode=theory or q-table")
    config.validate()
    rows = []
    if config.mode == "theory":
        p = config.resolve()
        rows.append(theory_row(p["n"], p["r"], p["s"], config.q_samples, config.seed))
        params = resolved_config(config, p)
    else:
        ns = config.n if isinstance(config.n, (list, tuple)) else [config.n]
        mus = config.mu if isinstance(config.mu, (list, tuple)) else [config.mu]
        for n in ns:
            for mu in mus:
                r = config.radius(int(n), mu)
                for ratio in config.ratios:
                    rows.append(theory_row(int(n), r, float(ratio) * r, config.q_samples, config.seed))
        params = {**asdict(config)}
    summary = {"config": params, "rows": [{k: v for k, v in row.items()} for row in rows]}
    public = [{k: v for k, v in row.items() if not k.startswith("_")} for row in rows]
    return Report(config.mode, THEORY_COLUMNS, public, summary)


def resolved_config(config: ExperimentConfig, p: dict) -> dict:
    out = asdict(config)
    out["resolved"] = dict(p)
    return out

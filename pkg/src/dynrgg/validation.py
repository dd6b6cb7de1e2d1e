"""Acceptance suite: each criterion is a function returning a CriterionResult.

Expensive simulations (static trial batches, long traces) are cached on a
``Suite`` object so criteria that share a run do not repeat it. Every
threshold is a named tolerance that can be overridden; overriding a
tolerance to 0 forces the corresponding check to fail.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np
from scipy import stats as sps
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as csgraph_components

from . import theory
from .experiments import simulate_trace, static_trials, summarize_trace
from .geometry import pairs_within
from .graph import build_rgg, component_census, connected_components
from .mobility import WorldConfig, positions_at
from .stats import CONNECTED, DISCONNECTED, batch_means_se, poisson_fit, record_connectivity, Aggregate

DEFAULT_TOLERANCES = {
    "c1_abs": 0.05,
    "c1_gap_se": 3.0,
    "c2_mean_lo": 0.9,
    "c2_mean_hi": 1.1,
    "c2_disp_lo": 0.85,
    "c2_disp_hi": 1.15,
    "c2_p": 0.01,
    "c3_factor": 2.0,
    "c4_rel_factor": 5.0,
    "c4_se": 3.0,
    "c5_rel": 0.15,
    "c5_se": 3.0,
    "c6_abs": 0.05,
    "c6_se": 3.0,
    "c7_rel": 0.15,
    "c8_periods": 1.0,
    "c9_se": 3.0,
    "c10_bb_rel": 0.02,
    "c11_p": 0.01,
}


@dataclass
class ValidationSettings:
    """Workload sizes. The defaults are the sizes the criteria call for."""

    seed: int = 0
    mu: float = 1.0
    static_ns: tuple = (500, 2000, 8000)
    static_trials: int = 20000
    connectivity_trials: int = 10000
    connectivity_n: int = 2000
    dynamic_n: int = 2000
    dynamic_steps: int = 200000
    dynamic_m: int = 10
    m_values: tuple = (1, 10, 100)
    qn_values: tuple = (1.0, 4.0)
    q_mc_samples: int = 10**7
    q_compare_samples: int = 10**6
    q_radius: float = 0.02
    oracle_instances: int = 1000
    oracle_max_n: int = 300
    stationarity_n: int = 1000
    stationarity_steps: int = 1000
    stationarity_seeds: int = 100
    workers: int = 1
    tolerances: dict = field(default_factory=dict)

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    @classmethod
    def quick(cls, **kw) -> "ValidationSettings":
        """Small workloads for smoke tests; verdicts are not meaningful at this size."""
        base = dict(static_ns=(200, 400, 800), static_trials=200, connectivity_trials=100,
                    connectivity_n=400, dynamic_n=300, dynamic_steps=2000, q_mc_samples=10**5,
                    q_compare_samples=10**5, oracle_instances=20, oracle_max_n=60,
                    stationarity_n=200, stationarity_steps=20, stationarity_seeds=10)
        base.update(kw)
        return cls(**base)


@dataclass
class Check:
    name: str
    measured: float
    target: str
    passed: bool


@dataclass
class CriterionResult:
    id: int
    name: str
    checks: list
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = "; ".join(f"{c.name}={_short(c.measured)} [{c.target}]{'' if c.passed else ' x'}"
                          for c in self.checks)
        return f"[{status}] criterion {self.id:2d} {self.name}: {parts}"

    def as_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks], "details": self.details,
                "seconds": self.seconds}


def _short(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.5g}"


def _within(x, lo, hi) -> bool:
    return bool(lo <= x <= hi)


# ---------------------------------------------------------------- oracles


def brute_adjacency(points: np.ndarray, r: float) -> np.ndarray:
    """Dense boolean adjacency from the full minimal-image distance matrix."""
    d = np.abs(points[:, None, :] - points[None, :, :])
    d = np.minimum(d, 1.0 - d)
    adj = np.sqrt((d ** 2).sum(axis=2)) <= r
    np.fill_diagonal(adj, False)
    return adj


def brute_partition(adj: np.ndarray) -> list[list[int]]:
    n = adj.shape[0]
    if n == 0:
        return []
    _, labels = csgraph_components(coo_matrix(adj), directed=False)
    groups = {}
    for v, lab in enumerate(labels):
        groups.setdefault(lab, []).append(v)
    return sorted(groups.values())


def _circular_cut(coords: np.ndarray):
    """Largest empty arc of points on the unit circle: (gap, lifted coords)."""
    order = np.argsort(coords)
    c = coords[order]
    gaps = np.diff(np.concatenate([c, [c[0] + 1.0]]))
    k = int(np.argmax(gaps))
    start = c[(k + 1) % len(c)]
    return float(gaps[k]), (coords - start) % 1.0


def brute_census(points: np.ndarray, r: float, epsilon: float, ell_max: int) -> dict:
    """Census from dense adjacency and circular-gap geometry.

    A component fits in [r, 1-r]^2 after translation exactly when each axis
    projection leaves an empty arc of length at least 2r.
    """
    n = len(points)
    parts = brute_partition(brute_adjacency(points, r)) if n else []
    sizes = [len(p) for p in parts]
    k_ell = {}
    for sz in sizes:
        k_ell[sz] = k_ell.get(sz, 0) + 1
    k_prime = {ell: 0 for ell in range(1, ell_max + 1)}
    non_emb = 0
    for part in parts:
        idx = np.array(part)
        gx, lx = _circular_cut(points[idx, 0])
        gy, ly = _circular_cut(points[idx, 1])
        if not (gx >= 2 * r and gy >= 2 * r):
            non_emb += 1
        if len(part) <= ell_max:
            if gx < r or gy < r:
                continue  # winds: nobody is within eps*r of everybody
            lead = idx[sorted(range(len(idx)), key=lambda a: (lx[a], ly[a], idx[a]))[0]]
            d = np.abs(points[idx] - points[lead])
            d = np.minimum(d, 1.0 - d)
            if np.all(np.sqrt((d ** 2).sum(axis=1)) <= epsilon * r):
                k_prime[len(part)] += 1
    largest = max(sizes) if sizes else 0
    k_tilde = {ell: sum(1 for sz in sizes if sz >= ell) - (1 if largest >= ell else 0)
               for ell in range(1, ell_max + 1)}
    return {"k1": k_ell.get(1, 0), "k_ell": dict(sorted(k_ell.items())), "k_prime": k_prime,
            "k_tilde_ell": k_tilde, "largest_size": largest, "non_embeddable_count": non_emb}


# ---------------------------------------------------------------- suite


class Suite:
    def __init__(self, settings: ValidationSettings | None = None):
        self.settings = settings or ValidationSettings()
        self._static = {}
        self._traces = {}
        self._s_for_qn = {}

    # shared runs
    def static_rows(self, n: int) -> list[dict]:
        if n not in self._static:
            st = self.settings
            trials = max(st.static_trials, st.connectivity_trials if n == st.connectivity_n else 0)
            r = theory.radius_for_mu(n, st.mu)
            self._static[n] = static_trials(n, r, st.seed, trials, workers=st.workers)
        return self._static[n]

    def step_length(self, qn: float) -> float:
        if qn not in self._s_for_qn:
            n = self.settings.dynamic_n
            self._s_for_qn[qn] = theory.invert_qn(n, theory.radius_for_mu(n, self.settings.mu), qn)
        return self._s_for_qn[qn]

    def trace(self, qn: float, m: int):
        key = (qn, m)
        if key not in self._traces:
            st = self.settings
            n = st.dynamic_n
            r = theory.radius_for_mu(n, st.mu)
            s = self.step_length(qn)
            tr = simulate_trace(WorldConfig(n=n, r=r, s=s, m=m, seed=st.seed), st.dynamic_steps)
            self._traces[key] = (tr, summarize_trace(tr), theory.predict(n, r, s))
        return self._traces[key]

    # criteria
    def criterion_1(self) -> CriterionResult:
        st = self.settings
        target = math.exp(-st.mu)
        rows = self.static_rows(st.connectivity_n)[: st.connectivity_trials]
        pc = float(np.mean([row["connected"] for row in rows]))
        checks = [Check(f"Pr(connected) n={st.connectivity_n}", pc, f"{target:.4f}±{st.tol('c1_abs')}",
                        abs(pc - target) <= st.tol("c1_abs"))]
        lo_n, hi_n = min(st.static_ns), max(st.static_ns)
        gaps, ses = {}, {}
        for n in (lo_n, hi_n):
            c = np.array([row["connected"] for row in self.static_rows(n)], dtype=float)
            gaps[n] = abs(c.mean() - target)
            ses[n] = c.std(ddof=1) / math.sqrt(len(c))
        slack = st.tol("c1_gap_se") * math.hypot(ses[lo_n], ses[hi_n])
        checks.append(Check(f"gap n={hi_n}", gaps[hi_n], f"<= gap n={lo_n} {gaps[lo_n]:.4f} + {slack:.4f}",
                            gaps[hi_n] <= gaps[lo_n] + slack))
        k1_zero = float(np.mean([row["k1"] == 0 for row in rows]))
        return CriterionResult(1, "static connectivity law", checks,
                               {"pr_connected": pc, "pr_k1_zero": k1_zero, "gaps": gaps, "gap_se": ses})

    def criterion_2(self) -> CriterionResult:
        st = self.settings
        rows = self.static_rows(st.connectivity_n)[: st.connectivity_trials]
        agg = Aggregate()
        agg.extend(row["k1"] for row in rows)
        fit = poisson_fit(agg, theory.mu_of(st.connectivity_n, theory.radius_for_mu(st.connectivity_n, st.mu)))
        checks = [
            Check("K1 mean", fit.mean, f"[{st.tol('c2_mean_lo')}, {st.tol('c2_mean_hi')}]",
                  _within(fit.mean, st.tol("c2_mean_lo"), st.tol("c2_mean_hi"))),
            Check("var/mean", fit.dispersion, f"[{st.tol('c2_disp_lo')}, {st.tol('c2_disp_hi')}]",
                  _within(fit.dispersion, st.tol("c2_disp_lo"), st.tol("c2_disp_hi"))),
            Check("chi2 p", fit.p_value, f"> {st.tol('c2_p')}", fit.p_value > st.tol("c2_p")),
        ]
        return CriterionResult(2, "Poisson isolated vertices", checks,
                               {"observed": fit.observed, "expected": fit.expected, "flag": fit.flag})

    def criterion_3(self) -> CriterionResult:
        st = self.settings
        ns = sorted(st.static_ns)
        pr = {n: float(np.mean([row["k_tilde_2"] > 0 for row in self.static_rows(n)])) for n in ns}
        dec = all(pr[a] > pr[b] for a, b in zip(ns, ns[1:]))
        ref = math.log(ns[-1]) / math.log(ns[0])
        ratio = pr[ns[0]] / pr[ns[-1]] if pr[ns[-1]] > 0 else math.inf
        f = st.tol("c3_factor")
        checks = [Check("strictly decreasing", dec, "True", dec),
                  Check(f"Pr ratio n={ns[0]}/n={ns[-1]}", ratio, f"[{ref / f:.3f}, {ref * f:.3f}]",
                        f > 0 and _within(ratio, ref / f, ref * f))]
        return CriterionResult(3, "small-component scarcity", checks, {"pr_k_tilde_2_positive": pr})

    def criterion_4(self) -> CriterionResult:
        st = self.settings
        r = st.q_radius
        k = st.tol("c4_rel_factor")
        checks, details = [], {}
        for ratio in (0.01, 0.05):
            s = ratio * r
            q = theory.q_quadrature(r, s)
            rel_stated = abs(q / (4 / math.pi * s * r) - 1)
            rel_fixed = abs(q / (theory.SMALL_S_CONSTANT * s * r) - 1)
            checks.append(Check(f"s/r={ratio} rel err vs (4/pi)sr", rel_stated, f"<= {k * ratio:.3g}",
                                rel_stated <= k * ratio))
            details[f"rel_err_8_over_pi_s/r={ratio}"] = rel_fixed
            details[f"rel_err_8_over_pi_s/r={ratio}_passes"] = rel_fixed <= k * ratio
        big = 0.01
        est = theory.q_monte_carlo(big, 50 * big, st.q_mc_samples, st.seed)
        z = abs(est.q - math.pi * big * big) / est.stderr
        checks.append(Check("s/r=50 |q_MC - pi r^2|/SE", z, f"<= {st.tol('c4_se')}", z <= st.tol("c4_se")))
        details["s/r=50 q/(pi r^2)"] = est.q / (math.pi * big * big)
        for ratio in (0.5, 1.0, 2.0):
            s = ratio * r
            qq = theory.q_quadrature(r, s)
            mc = theory.q_monte_carlo(r, s, st.q_compare_samples, st.seed + 1)
            z = abs(qq - mc.q) / mc.stderr
            checks.append(Check(f"s/r={ratio} |quad-MC|/SE", z, f"<= {st.tol('c4_se')}", z <= st.tol("c4_se")))
        return CriterionResult(4, "q oracle agreement", checks, details)

    def criterion_5(self) -> CriterionResult:
        st = self.settings
        tr, summ, pred = self.trace(st.qn_values[0], st.dynamic_m)
        rel = st.tol("c5_rel")
        eb, es = pred.expected_b, pred.expected_s
        z = abs(summ["mean_B_minus_D"]) / summ["se_B_minus_D"] if summ["se_B_minus_D"] > 0 else (
            0.0 if summ["mean_B_minus_D"] == 0 else math.inf)
        checks = [
            Check("mean B", summ["mean_B"], f"{eb:.4f}±{rel:.0%}", abs(summ["mean_B"] / eb - 1) <= rel),
            Check("mean D", summ["mean_D"], f"{eb:.4f}±{rel:.0%}", abs(summ["mean_D"] / eb - 1) <= rel),
            Check("mean S", summ["mean_S"], f"{es:.4f}±{rel:.0%}", abs(summ["mean_S"] / es - 1) <= rel),
            Check("|B-D|/SE", z, f"<= {st.tol('c5_se')}", z <= st.tol("c5_se")),
            Check("identity violations", tr.violations, "== 0", tr.violations == 0),
        ]
        return CriterionResult(5, "B/D/S means", checks, {"steps": summ["steps"]})

    def criterion_6(self) -> CriterionResult:
        st = self.settings
        _, summ, pred = self.trace(st.qn_values[0], st.dynamic_m)
        tol = st.tol("c6_abs")
        theory_joint = {"cc": pred.p_cc, "cd": pred.p_cd, "dc": pred.p_dc, "dd": pred.p_dd}
        checks = [Check(f"freq {k}", summ["joint"][k], f"{v:.4f}±{tol}", abs(summ["joint"][k] - v) <= tol)
                  for k, v in theory_joint.items()]
        diff = abs(summ["joint"]["cd"] - summ["joint"]["dc"])
        se = summ["se_cd_minus_dc"]
        checks.append(Check("|cd-dc|", diff, f"<= {st.tol('c6_se')}·SE={st.tol('c6_se') * se:.3g}",
                            diff <= st.tol("c6_se") * se))
        return CriterionResult(6, "joint transition probabilities", checks,
                               {"k1_zero_proxy_joint": summ["k1_zero_proxy"]["joint"]})

    def criterion_7(self) -> CriterionResult:
        st = self.settings
        rel = st.tol("c7_rel")
        checks, details = [], {}
        for qn in st.qn_values:
            _, summ, pred = self.trace(qn, st.dynamic_m)
            for kind, expected in ((CONNECTED, pred.el_c), (DISCONNECTED, pred.el_d)):
                got = summ["periods"][kind]["mean"]
                checks.append(Check(f"qn={qn:g} E L({kind[0].upper()})", got, f"{expected:.4f}±{rel:.0%}",
                                    abs(got / expected - 1) <= rel))
                details[f"qn={qn:g} k1_zero_proxy E L({kind[0].upper()})"] = \
                    summ["k1_zero_proxy"]["periods"][kind]["mean"]
        return CriterionResult(7, "expected period lengths", checks, details)

    def criterion_8(self) -> CriterionResult:
        st = self.settings
        tr, summ, _ = self.trace(st.qn_values[0], st.dynamic_m)
        mean_c = summ["periods"][CONNECTED]["mean"]
        ratio = summ["renewal_ratio"]
        gap = abs(ratio - mean_c)
        checks = [Check("|connected/DC - mean L(C)|", gap, f"<= {st.tol('c8_periods')}·{mean_c:.4f}",
                        gap <= st.tol("c8_periods") * mean_c),
                  Check("bookkeeping", summ["steps_connected"], f"== {int(tr.connected.sum())}",
                        summ["steps_connected"] == int(tr.connected.sum()))]
        return CriterionResult(8, "renewal identity", checks, {"renewal_ratio": ratio, "mean_L_C": mean_c})

    def criterion_9(self) -> CriterionResult:
        st = self.settings
        qn = st.qn_values[0]
        stats = {}
        for m in st.m_values:
            tr, _, _ = self.trace(qn, m)
            recs = record_connectivity(tr.connected)
            for kind in (CONNECTED, DISCONNECTED):
                lengths = [p.length for p in recs if p.kind == kind and p.complete]
                stats[(m, kind)] = batch_means_se(lengths, batches=50)
        checks = []
        for kind in (CONNECTED, DISCONNECTED):
            for a, b in ((a, b) for i, a in enumerate(st.m_values) for b in st.m_values[i + 1:]):
                (ma, sa), (mb, sb) = stats[(a, kind)], stats[(b, kind)]
                z = abs(ma - mb) / math.hypot(sa, sb)
                checks.append(Check(f"L({kind[0].upper()}) m={a} vs m={b} |diff|/SE", z,
                                    f"<= {st.tol('c9_se')}", z <= st.tol("c9_se")))
        return CriterionResult(9, "insensitivity to m", checks,
                               {f"m={m} {kind}": v[0] for (m, kind), v in stats.items()})

    def criterion_10(self) -> CriterionResult:
        st = self.settings
        rng = np.random.default_rng(np.random.SeedSequence(st.seed, spawn_key=(10,)))
        adj_bad = uf_bad = census_bad = 0
        for _ in range(st.oracle_instances):
            n = int(rng.integers(0, st.oracle_max_n + 1))
            r = float(rng.uniform(0.005, 0.45))
            pts = rng.random((n, 2))
            adj = brute_adjacency(pts, r) if n else np.zeros((0, 0), bool)
            ei, ej = pairs_within(pts, r)
            want = np.argwhere(np.triu(adj))
            if not (len(want) == len(ei) and np.array_equal(want, np.column_stack([ei, ej]))):
                adj_bad += 1
            g = build_rgg(pts, r)
            lab = connected_components(g)
            if sorted(sorted(int(v) for v in part) for part in lab.members().values()) != brute_partition(adj):
                uf_bad += 1
            got = component_census(pts, lab, r, epsilon=0.25, ell_max=4, graph=g)
            ref = brute_census(pts, r, 0.25, 4)
            if n and any(getattr(got, k) != v for k, v in ref.items()):
                census_bad += 1
        worst = 0.0
        n_bb = 10**5
        for k in (1, 2, 3):
            for np0 in (0.0, 1.0, 5.0, 10.0):
                for nps in product((0.1, 1.0, 10.0), repeat=k):
                    p0, ps = np0 / n_bb, [x / n_bb for x in nps]
                    exact = theory.balls_bins_exact(n_bb, p0, ps)
                    worst = max(worst, abs(theory.balls_bins_prob(n_bb, p0, ps) / exact - 1))
        checks = [Check("grid != brute instances", adj_bad, "== 0", adj_bad == 0),
                  Check("union-find != BFS instances", uf_bad, "== 0", uf_bad == 0),
                  Check("census != brute instances", census_bad, "== 0", census_bad == 0),
                  Check("balls-bins max rel err", worst, f"<= {st.tol('c10_bb_rel')}", worst <= st.tol("c10_bb_rel"))]
        return CriterionResult(10, "oracle equivalences", checks, {"instances": st.oracle_instances})

    def criterion_11(self) -> CriterionResult:
        st = self.settings
        n = st.stationarity_n
        r = theory.radius_for_mu(n, st.mu)
        pts = np.concatenate([
            positions_at(WorldConfig(n=n, r=r, s=0.5 * r, m=10, seed=st.seed + k), st.stationarity_steps)
            for k in range(st.stationarity_seeds)])
        px = sps.kstest(pts[:, 0], "uniform").pvalue
        py = sps.kstest(pts[:, 1], "uniform").pvalue
        counts = np.histogram2d(pts[:, 0], pts[:, 1], bins=10, range=[[0, 1], [0, 1]])[0].ravel()
        pc = sps.chisquare(counts).pvalue
        p = st.tol("c11_p")
        checks = [Check("KS x p", px, f"> {p}", px > p), Check("KS y p", py, f"> {p}", py > p),
                  Check("10x10 chi2 p", pc, f"> {p}", pc > p)]
        return CriterionResult(11, "stationarity", checks, {"samples": len(pts)})

    def run(self, ids=None, progress=None) -> list[CriterionResult]:
        results = []
        for cid in ids or range(1, 12):
            t0 = time.time()
            res = getattr(self, f"criterion_{cid}")()
            res.seconds = time.time() - t0
            if progress:
                progress(res)
            results.append(res)
        return results


def verdict_json(results: list[CriterionResult], settings: ValidationSettings) -> str:
    doc = {"passed": all(r.passed for r in results),
           "settings": {k: v for k, v in asdict(settings).items() if k != "tolerances"},
           "tolerances": {**DEFAULT_TOLERANCES, **settings.tolerances},
           "criteria": [r.as_dict() for r in results]}
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, dict):
        return {str(k): v for k, v in o.items()}
    raise TypeError(type(o))

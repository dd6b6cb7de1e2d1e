"""Closed-form and numerically integrated predictions for the dynamic RGG.

The central quantity is ``q``: the probability that two agents adjacent at
step t are no longer adjacent at step t+1. Everything about the two-step
dynamics (births/deaths of isolated vertices, transition probabilities,
expected period lengths) follows from ``mu`` and ``q * n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .quadrature import QuadratureError, adaptive_gauss_legendre

SMALL_S_RATIO = 0.05
LARGE_S_RATIO = 20.0
QUAD_MAX_RATIO = 10.0
QUAD_MAX_EXTENT = 0.25
DEFAULT_MC_SAMPLES = 10**6

# Leading-order constant of q for s << r, i.e. q ~ SMALL_S_CONSTANT * s * r.
# Both endpoints move, so the relative displacement has mean length
# E|s(e1 - e2)| = 4s/pi and the exposed crescent has area 2r * that.
SMALL_S_CONSTANT = 8.0 / math.pi


def mu_of(n: int, r: float) -> float:
    """Expected number of isolated vertices, ``n * exp(-pi r^2 n)``."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    return n * math.exp(-math.pi * r * r * n)


def radius_for_mu(n: int, mu: float) -> float:
    if not 0 < mu <= n:
        raise ValueError(f"mu must lie in (0, n], got {mu}")
    return math.sqrt(math.log(n / mu) / (math.pi * n))


def one_minus_exp_neg(x):
    """``1 - exp(-x)`` without cancellation for small ``x``."""
    return -np.expm1(-x) if isinstance(x, np.ndarray) else -math.expm1(-x)


# ---------------------------------------------------------------- q


@dataclass(frozen=True)
class QEstimate:
    q: float
    stderr: float
    method: str  # "quadrature" | "montecarlo" | "exact"

    def __float__(self):
        return self.q


def _wrap_free(r, s):
    return s <= QUAD_MAX_RATIO * r and r + s < QUAD_MAX_EXTENT


def q_quadrature(r: float, s: float, tol: float = 1e-8) -> float:
    """Edge-break probability by nested adaptive Gauss-Legendre.

    Polar coordinates (rho, theta) are centred on agent i's new position,
    with its old position at distance s along theta = pi. For a partner at
    distance rho from that point, the fraction of headings that take it out
    of range is arccos((r^2 - s^2 - rho^2) / (2 s rho)) / pi. The partner
    must start within r of agent i's old position, which bounds rho for
    each theta. Valid only while nothing wraps around the torus.
    """
    if not (r > 0 and s >= 0):
        raise ValueError("need r > 0 and s >= 0")
    if s == 0:
        return 0.0
    if not _wrap_free(r, s):
        raise ValueError("quadrature path needs s <= 10 r and r + s < 1/4")
    if not 0 < tol <= 1e-6:
        raise ValueError("quadrature tolerance must lie in (0, 1e-6]")
    r2, s2 = r * r, s * s
    kinks = (abs(r - s), s + r)
    # q is at least of order min(r s, r^2); absolute floors are set from that
    floor = tol * 1e-2 * min(r * s, r2)

    def exposed(rho):
        arg = (r2 - s2 - rho * rho) / (2.0 * s * rho)
        return rho * np.arccos(np.clip(arg, -1.0, 1.0)) / math.pi

    def radial(theta):
        out = np.empty(len(theta))
        for k, th in enumerate(theta):
            disc = r2 - s2 * math.sin(th) ** 2
            if disc <= 0.0:
                out[k] = 0.0
                continue
            root = math.sqrt(disc)
            hi = -s * math.cos(th) + root
            # partners closer than r - s stay in range whatever they do
            lo = r - s if s < r else max(0.0, -s * math.cos(th) - root)
            if hi <= lo:
                out[k] = 0.0
                continue
            out[k] = adaptive_gauss_legendre(exposed, lo, hi, rtol=tol * 1e-2,
                                             atol=floor, breakpoints=kinks,
                                             smooth_ends=True)[0]
        return out

    theta_lo = math.pi - math.asin(r / s) if s > r else 0.0
    val, _ = adaptive_gauss_legendre(radial, theta_lo, math.pi, rtol=tol, atol=floor,
                                    smooth_ends=True)
    return 2.0 * val


def q_monte_carlo(r: float, s: float, samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
                  strata: int = 32) -> QEstimate:
    """Stratified Monte Carlo estimate of q on the torus, with standard error.

    Both headings are stratified on a ``strata x strata`` grid; within a
    stratum the partner's offset is uniform on the radius-r disc (which
    carries the exact factor pi r^2) and the separation after the step is
    measured with the torus metric, so wrap-around is handled exactly.
    """
    if not (0 < r < 0.5 and s >= 0):
        raise ValueError("need 0 < r < 1/2 and s >= 0")
    if s == 0:
        return QEstimate(0.0, 0.0, "exact")
    k2 = strata * strata
    per = max(2, samples // k2)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    cells = np.arange(k2)
    zi0 = (cells // strata).astype(float)
    zj0 = (cells % strata).astype(float)
    hits = np.zeros(k2)
    rows = max(1, 2**20 // per)
    for lo in range(0, k2, rows):
        sl = slice(lo, min(k2, lo + rows))
        shape = (sl.stop - sl.start, per)
        u = rng.random((5,) + shape)
        zi = (zi0[sl, None] + u[0]) / strata
        zj = (zj0[sl, None] + u[1]) / strata
        rad = r * np.sqrt(u[2])
        ang = 2.0 * math.pi * u[3]
        px = rad * np.cos(ang) + s * (np.cos(2 * math.pi * zj) - np.cos(2 * math.pi * zi))
        py = rad * np.sin(ang) + s * (np.sin(2 * math.pi * zj) - np.sin(2 * math.pi * zi))
        px -= np.round(px)
        py -= np.round(py)
        hits[sl] = np.count_nonzero(px * px + py * py > r * r, axis=1)
    frac = hits / per
    var = frac * (1.0 - frac) / (per - 1)
    area = math.pi * r * r
    q = area * float(frac.mean())
    stderr = area * math.sqrt(float(var.sum())) / k2
    return QEstimate(q, stderr, "montecarlo")


def q_exact(r: float, s: float, tol: float = 1e-8, samples: int = DEFAULT_MC_SAMPLES,
            seed: int = 0) -> QEstimate:
    """q by quadrature where the geometry is wrap-free, stratified MC otherwise."""
    if not (r > 0 and s >= 0):
        raise ValueError("need r > 0 and s >= 0")
    if s == 0:
        return QEstimate(0.0, 0.0, "exact")
    if _wrap_free(r, s):
        return QEstimate(q_quadrature(r, s, tol), 0.0, "quadrature")
    return q_monte_carlo(r, s, samples=samples, seed=seed)


def q_asymptotic(r: float, s: float, **kw) -> tuple[float, str]:
    """Regime value of q: (8/pi) s r for s << r, pi r^2 for s >> r, exact in between."""
    if not (r > 0 and s >= 0):
        raise ValueError("need r > 0 and s >= 0")
    ratio = s / r
    if ratio < SMALL_S_RATIO:
        return SMALL_S_CONSTANT * s * r, "small_s"
    if ratio > LARGE_S_RATIO:
        return math.pi * r * r, "large_s"
    return q_exact(r, s, **kw).q, "theta_r"


def invert_qn(n: int, r: float, target_qn: float, tol: float = 1e-8, samples: int = DEFAULT_MC_SAMPLES,
              seed: int = 0, s_max: float = 16.0) -> float:
    """Step length ``s`` with ``q_exact(r, s) * n == target_qn``.

    The root is bracketed by doubling from ``s = r`` and then refined with
    Brent's method; monotonicity of q in s is not assumed. In the Monte
    Carlo regime the estimator uses a fixed seed, so q(s) is a deterministic
    step function and the bracket still closes.
    """
    ceiling = math.pi * r * r * n
    if not 0 < target_qn <= ceiling:
        raise ValueError(f"target qn={target_qn} outside (0, pi r^2 n = {ceiling:.6g}]")

    def gap(s):
        return q_exact(r, s, tol=tol, samples=samples, seed=seed).q * n - target_qn

    lo, hi = 0.0, r
    while gap(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > s_max:
            raise ValueError(f"target qn={target_qn} not reached for s <= {s_max}")
    return brentq(gap, lo, hi, xtol=1e-15, rtol=1e-12, maxiter=200)


# ---------------------------------------------------------------- closed forms


def bds_from(mu: float, qn: float) -> tuple[float, float, float]:
    """(E B, E D, E S) from mu and q n."""
    eb = mu * one_minus_exp_neg(qn)
    return eb, eb, mu * math.exp(-qn)


def transition_probs_from(mu: float, eb: float) -> tuple[float, float, float, float]:
    """(p_cc, p_cd, p_dc, p_dd) for connectivity at two consecutive steps."""
    pc = math.exp(-mu)
    stay = math.exp(-eb)
    p_cd = pc * one_minus_exp_neg(eb)
    p_cc = pc * stay
    p_dd = 1.0 - 2.0 * pc + pc * stay
    return p_cc, p_cd, p_cd, p_dd


def period_lengths_from(mu: float, eb: float) -> tuple[float, float]:
    """Expected lengths of connected and disconnected periods; inf when E B = 0."""
    if eb <= 0:
        return math.inf, math.inf
    flip = one_minus_exp_neg(eb)
    return 1.0 / flip, math.expm1(mu) / flip


def expected_bds(n: int, r: float, s: float, **kw) -> tuple[float, float, float]:
    return bds_from(mu_of(n, r), q_exact(r, s, **kw).q * n)


def transition_probs(n: int, r: float, s: float, **kw):
    eb, _, _ = expected_bds(n, r, s, **kw)
    return transition_probs_from(mu_of(n, r), eb)


def expected_period_lengths(n: int, r: float, s: float, **kw) -> tuple[float, float]:
    eb, _, _ = expected_bds(n, r, s, **kw)
    return period_lengths_from(mu_of(n, r), eb)


def srn_regime(s: float, r: float, n: int) -> str:
    x = s * r * n
    if x < SMALL_S_RATIO:
        return "srn_small"
    if x > LARGE_S_RATIO:
        return "srn_large"
    return "srn_theta"


def period_lengths_asymptotic(n: int, r: float, s: float) -> tuple[float, float, str]:
    """Regime forms of the expected period lengths.

    srn << 1: E B ~ mu q n with q ~ (8/pi) s r, so E L(C) ~ pi / (8 mu s r n).
    srn >> 1: q n -> infinity, E B -> mu. Otherwise the closed form with the
    small-s q, which is where srn = Theta(1) lives for large n.
    """
    mu = mu_of(n, r)
    regime = srn_regime(s, r, n)
    if s == 0:
        return math.inf, math.inf, regime
    if regime == "srn_small":
        eb = mu * SMALL_S_CONSTANT * s * r * n
        return 1.0 / eb, math.expm1(mu) / eb, regime
    if regime == "srn_large":
        el_c, el_d = period_lengths_from(mu, mu)
        return el_c, el_d, regime
    eb = mu * one_minus_exp_neg(SMALL_S_CONSTANT * s * r * n)
    el_c, el_d = period_lengths_from(mu, eb)
    return el_c, el_d, regime


@dataclass
class TheoryPrediction:
    n: int
    r: float
    s: float
    mu: float
    q: float
    q_stderr: float
    qn: float
    q_asymptotic: float
    regime: str
    expected_b: float
    expected_s: float
    p_cc: float
    p_cd: float
    p_dc: float
    p_dd: float
    el_c: float
    el_d: float
    el_c_asymptotic: float
    el_d_asymptotic: float
    srn_regime: str
    q_method: str

    def as_dict(self):
        return asdict(self)


def predict(n: int, r: float, s: float, tol: float = 1e-8, samples: int = DEFAULT_MC_SAMPLES,
            seed: int = 0) -> TheoryPrediction:
    mu = mu_of(n, r)
    est = q_exact(r, s, tol=tol, samples=samples, seed=seed)
    qa, regime = q_asymptotic(r, s) if s / r < SMALL_S_RATIO or s / r > LARGE_S_RATIO else (est.q, "theta_r")
    qn = est.q * n
    eb, _, es = bds_from(mu, qn)
    p_cc, p_cd, p_dc, p_dd = transition_probs_from(mu, eb)
    el_c, el_d = period_lengths_from(mu, eb)
    ela_c, ela_d, sregime = period_lengths_asymptotic(n, r, s)
    return TheoryPrediction(n, r, s, mu, est.q, est.stderr, qn, qa, regime, eb, es,
                            p_cc, p_cd, p_dc, p_dd, el_c, el_d, ela_c, ela_d, sregime, est.method)


# ---------------------------------------------------------------- balls and bins


def _check_bins(p0, ps):
    probs = [p0, *ps]
    if any(not 0 <= p < 1 for p in probs) or sum(probs) > 1 + 1e-15:
        raise ValueError("bin probabilities must lie in [0, 1) and sum to at most 1")


def balls_bins_prob(n: int, p0: float, ps: Sequence[float]) -> float:
    """Asymptotic probability that bin 0 is empty while bins 1..k are all occupied."""
    _check_bins(p0, ps)
    out = (1.0 - p0) ** n
    for p in ps:
        out *= one_minus_exp_neg(n * p)
    return out


def balls_bins_exact(n: int, p0: float, ps: Sequence[float]) -> float:
    """Exact value of the same probability by inclusion-exclusion over subsets of bins."""
    _check_bins(p0, ps)
    total = 0.0
    k = len(ps)
    for size in range(k + 1):
        for subset in itertools.combinations(ps, size):
            total += (-1) ** size * max(0.0, 1.0 - p0 - sum(subset)) ** n
    return total


__all__ = [
    "QEstimate", "QuadratureError", "TheoryPrediction", "balls_bins_exact", "balls_bins_prob",
    "bds_from", "expected_bds", "expected_period_lengths", "invert_qn", "mu_of", "one_minus_exp_neg",
    "period_lengths_asymptotic", "period_lengths_from", "predict", "q_asymptotic", "q_exact",
    "q_monte_carlo", "q_quadrature", "radius_for_mu", "srn_regime", "transition_probs",
    "transition_probs_from",
]

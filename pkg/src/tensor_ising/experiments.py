"""Reproduction drivers: exact p-values, average p-value curves, LDP and normality tables."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from . import bahadur
from . import curie_weiss as cw
from . import er_model as er
from . import estimators as est
from . import landscape as ls
from .errors import DomainError

CURVE_COLUMNS = ["n", "mean_pvalue", "sd_pvalue", "n_replicates"]


# ---------------------------------------------------------------------------
# exact p-values under the Curie-Weiss null
# ---------------------------------------------------------------------------

def support_statistic(n: int, p: int, beta0: float, statistic: str) -> np.ndarray:
    """Estimator value, or an order-equivalent surrogate, at every support point.

    MPLE: ``max(eta_p(m), 0)`` (``+inf`` where the estimate diverges).
    MLE: the estimate is a nondecreasing function of ``m**p`` that is 0
    whenever ``m**p <= E_{0}[Xbar**p]``, so ``max(m**p, E_0)`` orders the
    support exactly as the estimate does, ties included.
    """
    m = cw.support(n)
    if statistic == "MPLE":
        return np.maximum(ls.eta(m, p), 0.0)
    if statistic == "MLE":
        e0 = 0.0 if p % 2 == 1 else est.expected_power(0.0, p, n)
        return np.maximum(m**p, e0)
    raise DomainError(f"statistic must be MPLE or MLE, got {statistic!r}")


@dataclass(frozen=True)
class PValueTable:
    """Null law of a statistic, for inclusive upper-tail probabilities ``P(T >= t)``."""

    sorted_values: np.ndarray
    tail: np.ndarray  # tail[j] = P(T >= sorted_values[j]); tail[len] = 0

    @classmethod
    def from_masses(cls, values, probs) -> "PValueTable":
        order = np.argsort(values, kind="stable")
        v = np.asarray(values, dtype=float)[order]
        pr = np.asarray(probs, dtype=float)[order]
        tail = np.concatenate([np.cumsum(pr[::-1])[::-1], [0.0]])
        return cls(v, np.minimum(tail, 1.0))

    def pvalue(self, t):
        j = np.searchsorted(self.sorted_values, t, side="left")
        out = self.tail[j]
        return float(out) if np.ndim(t) == 0 else out


@lru_cache(maxsize=256)
def null_table(beta0: float, p: int, n: int, statistic: str = "MPLE") -> PValueTable:
    dist = cw.build_dist(ls.ModelSpec(p=p, beta=beta0, n=n))
    return PValueTable.from_masses(support_statistic(n, p, beta0, statistic), dist.probs)


@lru_cache(maxsize=256)
def _support_pvalues(beta0: float, p: int, n: int, statistic: str) -> np.ndarray:
    stat = support_statistic(n, p, beta0, statistic)
    return null_table(beta0, p, n, statistic).pvalue(stat)


def _index_of_mean(mean, n):
    k = np.rint((np.asarray(mean, dtype=float) + 1.0) * n / 2.0).astype(np.int64)
    if np.any(k < 0) or np.any(k > n):
        raise DomainError("observed mean lies outside [-1, 1]")
    return k


def exact_pvalue_cw(observed_mean: float, beta0: float, p: int, n: int, statistic: str = "MPLE") -> float:
    """``P_{beta0}(estimate >= estimate(observed))``, summed exactly over the support."""
    k = _index_of_mean(observed_mean, n)
    if abs((2.0 * k - n) / n - observed_mean) > 1e-9:
        raise DomainError(f"observed mean {observed_mean} is not a point of M_{n}")
    return float(_support_pvalues(float(beta0), int(p), int(n), statistic)[k])


# ---------------------------------------------------------------------------
# p-value curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveConfig:
    model: str = "CW"
    p: int = 2
    beta0: float = 0.7
    beta: float = 0.9
    delta: float = 0.01
    seed: int = 0
    replicates: int = 10_000
    n_grid: tuple = tuple(range(175, 376))
    statistic: str = "MPLE"
    # ER only
    alpha: float = 0.5
    glauber_steps: int = 1_000_000
    init: str = "auto"
    er_statistic: str = "mple_er"
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        if list(self.n_grid) != sorted(set(self.n_grid)):
            raise DomainError("n_grid must be strictly ascending")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.model not in ("CW", "ER"):
            raise DomainError(f"model must be CW or ER, got {self.model!r}")


@dataclass
class PValueCurve:
    config: CurveConfig
    rows: list  # (n, mean_pvalue, sd_pvalue, n_replicates)
    medians: list
    empirical_N: float
    theoretical_N: float
    runtime: float = 0.0
    samples: dict = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        lines = [",".join(CURVE_COLUMNS)]
        for n, mean, sd, reps in self.rows:
            lines.append(f"{n},{mean!r},{sd!r},{reps}")
        return "\n".join(lines) + "\n"

    def sidecar(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.config.seed,
            "empirical_N": _num(self.empirical_N),
            "theoretical_N": _num(self.theoretical_N),
            "median_pvalue": dict(zip([r[0] for r in self.rows], self.medians)),
            "runtime_seconds": self.runtime,
        }

    def write(self, csv_path, json_path=None) -> None:
        with open(csv_path, "w", newline="\n") as fh:
            fh.write(self.to_csv())
        if json_path is not None:
            with open(json_path, "w") as fh:
                json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
                fh.write("\n")


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return v


def empirical_N(rows, delta: float) -> float:
    """Smallest grid n from which every larger grid n has mean p-value <= delta."""
    best = math.inf
    for n, mean, *_ in reversed(rows):
        if mean <= delta:
            best = n
        else:
            break
    return best


def theoretical_N(beta0, beta, p, delta, statistic="MPLE") -> float:
    if not beta > beta0:
        return math.inf
    rep = bahadur.optimal_sample_sizes(beta0, beta, p, delta, check=False)
    return rep.n_star_mple if statistic == "MPLE" else rep.n_star_mle


def _summary(pv: np.ndarray):
    sd = float(np.std(pv, ddof=1)) if len(pv) > 1 else 0.0
    return float(np.mean(pv)), sd, float(np.median(pv))


def _finish(config, rows, medians, t0, samples):
    emp = empirical_N(rows, config.delta)
    theo = theoretical_N(config.beta0, config.beta, config.p, config.delta, config.statistic)
    return PValueCurve(config, rows, medians, emp, theo, time.perf_counter() - t0, samples)


def pvalue_curve_cw(config: CurveConfig, keep_samples: bool = False) -> PValueCurve:
    """Average exact p-value against n, sampling exactly under the alternative."""
    t0 = time.perf_counter()
    rows, medians, samples = [], [], {}
    for n in config.n_grid:
        dist = cw.build_dist(ls.ModelSpec(p=config.p, beta=config.beta, n=n))
        means = cw.sample_means(dist, config.replicates, [config.seed, n])
        pv = _support_pvalues(float(config.beta0), config.p, n, config.statistic)[_index_of_mean(means, n)]
        mean, sd, med = _summary(pv)
        rows.append((n, mean, sd, config.replicates))
        medians.append(med)
        if keep_samples:
            samples[n] = pv
    return _finish(config, rows, medians, t0, samples)


def _er_replicate(graph, config, n, r):
    init = config.init
    if init == "auto":
        init = "random" if config.p == 2 else "plus"
    inst = er.new_instance(graph, init=init, seed=[config.seed, n, 1, r])
    er.glauber_sweep(inst, config.beta, config.glauber_steps, [config.seed, n, 2, r])
    if config.er_statistic == "mple_er":
        return est.mple_er(inst).value
    if config.er_statistic == "eta":
        return max(ls.eta(inst.mean, config.p), 0.0)
    raise DomainError(f"er_statistic must be mple_er or eta, got {config.er_statistic!r}")


def pvalue_curve_er(config: CurveConfig, keep_samples: bool = False) -> PValueCurve:
    """Average p-value against n for Glauber samples on an Erdos-Renyi hypergraph.

    The observed pseudolikelihood estimate is referred to the exact
    Curie-Weiss null law of the MPLE at ``beta0``.
    """
    if config.statistic != "MPLE":
        raise DomainError("only the MPLE statistic is available for the ER model")
    t0 = time.perf_counter()
    rows, medians, samples = [], [], {}
    for n in config.n_grid:
        graph = er.generate(n, config.p, config.alpha, [config.seed, n, 0])
        table = null_table(float(config.beta0), config.p, n, "MPLE")
        reps = range(config.replicates)
        if config.threads > 1:
            with ThreadPoolExecutor(config.threads) as pool:
                stats = list(pool.map(lambda r: _er_replicate(graph, config, n, r), reps))
        else:
            stats = [_er_replicate(graph, config, n, r) for r in reps]
        pv = table.pvalue(np.array(stats, dtype=float))
        mean, sd, med = _summary(pv)
        rows.append((n, mean, sd, config.replicates))
        medians.append(med)
        if keep_samples:
            samples[n] = pv
    return _finish(config, rows, medians, t0, samples)


def pvalue_curve(config: CurveConfig, keep_samples: bool = False) -> PValueCurve:
    return (pvalue_curve_cw if config.model == "CW" else pvalue_curve_er)(config, keep_samples)


# ---------------------------------------------------------------------------
# normality and LDP tables
# ---------------------------------------------------------------------------

@dataclass
class NormalityHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    overlay_mean: float
    overlay_variance: float
    sample_mean: float
    sample_variance: float
    standard_error: float
    n_finite: int
    n_diverged: int

    def rows(self):
        return [(float(a), float(b), int(c)) for a, b, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts)]


def _cw_estimates(means, p, n, statistic):
    if statistic == "MPLE":
        return np.array([est.mple_cw(m, p).value for m in means])
    values = {}
    for m in np.unique(means):
        values[m] = est.mle_cw(float(m), p, n).value
    return np.array([values[m] for m in means])


def normality_histogram(model: str, p: int, beta: float, n: int, replicates: int, statistic: str = "MPLE",
                        seed: int = 0, bins: int = 50, alpha: float = 1.0, glauber_steps: int = 100_000
                        ) -> NormalityHistogram:
    """Histogram of ``sqrt(n) (estimate - beta)`` with the limiting normal's parameters.

    Diverged estimates (all spins aligned) are counted separately and left
    out of the histogram and moments.
    """
    var = est.asymptotic_variance(beta, p)
    if model == "CW":
        dist = cw.build_dist(ls.ModelSpec(p=p, beta=beta, n=n))
        means = cw.sample_means(dist, replicates, [seed, n])
        values = _cw_estimates(means, p, n, statistic)
    elif model == "ER":
        if statistic != "MPLE":
            raise DomainError("only the MPLE statistic is available for the ER model")
        graph = er.generate(n, p, alpha, [seed, n, 0])
        init = "random" if p == 2 else "plus"
        vals = []
        for r in range(replicates):
            inst = er.new_instance(graph, init=init, seed=[seed, n, 1, r])
            er.glauber_sweep(inst, beta, glauber_steps, [seed, n, 2, r])
            vals.append(est.mple_er(inst).value)
        values = np.array(vals)
    else:
        raise DomainError(f"model must be CW or ER, got {model!r}")
    finite = values[np.isfinite(values)]
    z = math.sqrt(n) * (finite - beta)
    if len(z):
        counts, edges = np.histogram(z, bins=1 if len(z) == 1 else bins)
        mu = float(np.mean(z))
        sv = float(np.var(z, ddof=1)) if len(z) > 1 else 0.0
    else:
        counts, edges, mu, sv = np.zeros(0, dtype=int), np.zeros(1), math.nan, math.nan
    se = math.sqrt(sv / len(z)) if len(z) > 1 else math.nan
    return NormalityHistogram(edges, counts, 0.0, var, mu, sv, se, len(finite), int(len(values) - len(finite)))


@dataclass(frozen=True)
class LdpRow:
    n: int
    rate: float
    limit: float
    gap: float


def ldp_limit(beta: float, p: int, interval) -> float:
    a, b = interval
    return ls.sup_H_interval(beta, p, a, b) - ls.sup_H(beta, p)


def ldp_convergence_table(beta: float, p: int, interval, n_list) -> list[LdpRow]:
    limit = ldp_limit(beta, p, interval)
    return [LdpRow(n, rate, limit, abs(rate - limit)) for n, rate in cw.ldp_rate_check(beta, p, interval, n_list)]

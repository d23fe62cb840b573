"""Exact finite-n Curie-Weiss law of the mean spin.

With ``N = n (1 + m) / 2`` spins up, the law of the mean spin is

    P(Xbar = m) = 2**-n * C(n, N) * exp(n * beta * m**p) / Z_n

and everything (sampling, moments, exact tails) is a finite sum over the
n + 1 support points, carried in log domain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError
from .landscape import ModelSpec


@lru_cache(maxsize=64)
def _log_binom_row(n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    row = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    row.setflags(write=False)
    return row


def support(n: int) -> np.ndarray:
    """``M_n = {-1, -1 + 2/n, ..., 1}`` as ``(2k - n) / n``."""
    return (2.0 * np.arange(n + 1) - n) / n


@dataclass(frozen=True)
class SpinSample:
    spins: np.ndarray
    mean: float


@dataclass(frozen=True)
class MagnetizationDist:
    spec: ModelSpec
    support: np.ndarray
    log_weights: np.ndarray
    log_Z: float
    probs: np.ndarray

    @property
    def n(self) -> int:
        return self.spec.n

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "prob", "log_weight"])
            for m, pr, lw in zip(self.support, self.probs, self.log_weights):
                w.writerow([repr(float(m)), repr(float(pr)), repr(float(lw))])


def log_weights(n: int, beta: float, p: int) -> np.ndarray:
    m = support(n)
    return _log_binom_row(n) - n * np.log(2.0) + n * beta * m**p


def build_dist(spec: ModelSpec) -> MagnetizationDist:
    if spec.n is None:
        raise DomainError("build_dist needs a finite n")
    n = int(spec.n)
    lw = log_weights(n, spec.beta, spec.p)
    log_z = float(logsumexp(lw))
    probs = np.exp(lw - log_z)
    if spec.p % 2 == 0:
        # enforce exact symmetry against rounding in the m**p term
        probs = 0.5 * (probs + probs[::-1])
    probs = probs / probs.sum()
    return MagnetizationDist(spec=spec, support=support(n), log_weights=lw, log_Z=log_z, probs=probs)


def _draw_k(dist: MagnetizationDist, count: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(dist.probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(count), side="right")


def sample_means(dist: MagnetizationDist, count: int, seed) -> np.ndarray:
    """Mean spins of ``count`` exact draws; same stream as :func:`sample`."""
    rng = np.random.default_rng(seed)
    k = _draw_k(dist, count, rng)
    return (2.0 * k - dist.n) / dist.n


def sample(dist: MagnetizationDist, count: int, seed) -> list[SpinSample]:
    """Exact configurations: draw the magnetization, then a uniform set of up-spins."""
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    n = dist.n
    ks = _draw_k(dist, count, rng)
    out = []
    for k in ks:
        spins = -np.ones(n, dtype=np.int8)
        spins[rng.permutation(n)[:k]] = 1
        out.append(SpinSample(spins=spins, mean=(2.0 * k - n) / n))
    return out


def moment(dist: MagnetizationDist, k: int) -> float:
    if k < 1:
        raise DomainError("k must be >= 1")
    if k % 2 == 1 and dist.spec.p % 2 == 0:
        return 0.0
    return float(np.dot(dist.probs, dist.support**k))


def tail_prob(dist: MagnetizationDist, predicate) -> float:
    """Exact mass of the support points where ``predicate`` holds.

    ``predicate`` may be vectorised (array in, bool array out) or scalar.
    """
    try:
        mask = np.asarray(predicate(dist.support), dtype=bool)
        if mask.shape != dist.support.shape:
            raise TypeError
    except (TypeError, ValueError):
        mask = np.array([bool(predicate(float(m))) for m in dist.support])
    return float(dist.probs[mask].sum())


def ldp_rate_check(beta: float, p: int, interval, n_list) -> list[tuple[int, float]]:
    """``(n, log P(Xbar in (a, b)) / n)`` for each n (open interval)."""
    a, b = interval
    if not a < b:
        raise DomainError("need a < b")
    out = []
    for n in n_list:
        n = int(n)
        lw = log_weights(n, beta, p)
        m = support(n)
        inside = (m > a) & (m < b)
        log_z = logsumexp(lw)
        lp = logsumexp(lw[inside]) - log_z if inside.any() else -np.inf
        out.append((n, float(lp) / n))
    return out

"""Point estimators of beta: pseudolikelihood and maximum likelihood."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import landscape as ls
from .curie_weiss import log_weights, support
from .errors import DomainError, NonConvergence

BETA_MAX = 50.0
BETA_TOL = 1e-9
MAX_ITER = 200

INTERIOR = "interior"
AT_ZERO = "at_zero"
DIVERGED = "diverged"


@dataclass(frozen=True)
class Estimate:
    value: float  # math.inf when boundary == "diverged"
    method: str
    converged: bool = True
    boundary: str = INTERIOR

    @property
    def diverged(self) -> bool:
        return self.boundary == DIVERGED


def _check_mean(sample_mean):
    if not abs(sample_mean) <= 1:
        raise DomainError(f"sample mean must lie in [-1, 1], got {sample_mean}")


def mple_cw(sample_mean: float, p: int) -> Estimate:
    """``max(eta_p(mean), 0)``; infinite at ``|mean| = 1`` (odd p: only at +1)."""
    _check_mean(sample_mean)
    v = ls.eta(float(sample_mean), p)
    if v == math.inf:
        return Estimate(math.inf, "MPLE", True, DIVERGED)
    if v < 0 or v == -math.inf:
        return Estimate(0.0, "MPLE", True, AT_ZERO)
    return Estimate(float(v), "MPLE", True, AT_ZERO if v == 0 else INTERIOR)


def expected_power(beta: float, p: int, n: int) -> float:
    """``E_beta[Xbar**p]`` under the exact n-spin law."""
    lw = log_weights(n, beta, p)
    w = np.exp(lw - lw.max())
    m = support(n)
    return float(np.dot(w, m**p) / w.sum())


def _solve_increasing(f, target, zero_value, what, method):
    """Smallest root of the increasing ``f(beta) = target`` on ``[0, BETA_MAX]``."""
    if target <= zero_value:
        return Estimate(0.0, method, True, AT_ZERO)
    if f(BETA_MAX) <= target:
        return Estimate(math.inf, method, True, DIVERGED)
    try:
        root, info = brentq(
            lambda b: f(b) - target, 0.0, BETA_MAX, xtol=BETA_TOL / 10, maxiter=MAX_ITER, full_output=True
        )
    except RuntimeError as exc:
        raise NonConvergence(f"{what}: {exc}") from exc
    if not info.converged:
        raise NonConvergence(f"{what}: no convergence in {MAX_ITER} iterations")
    return Estimate(float(root), method, True, INTERIOR)


def mle_cw(sample_mean: float, p: int, n: int) -> Estimate:
    """Solve ``E_beta[Xbar**p] = mean**p`` (the likelihood equation) for beta >= 0.

    The left side is strictly increasing in beta (log Z is strictly convex),
    so the root is unique.  ``mean**p`` at or below its beta = 0 value gives
    0; a target above ``E_{BETA_MAX}`` (always the case at ``|mean| = 1``
    for even p) is reported as diverged.
    """
    _check_mean(sample_mean)
    n = int(n)
    target = float(sample_mean) ** p
    e0 = 0.0 if p % 2 == 1 else expected_power(0.0, p, n)
    if abs(sample_mean) == 1 and target > 0:
        return Estimate(math.inf, "MLE", True, DIVERGED)
    return _solve_increasing(lambda b: expected_power(b, p, n), target, e0, "mle_cw", "MLE")


def psi(beta: float, fields: np.ndarray, p: int) -> float:
    """``n**-1 * sum_i m_i tanh(p beta m_i)``."""
    return float(np.mean(fields * np.tanh(p * beta * fields)))


def mple_from_fields(fields: np.ndarray, spins: np.ndarray, p: int) -> Estimate:
    """Pseudolikelihood root ``psi(beta) = H / n`` with ``H = sum_i x_i m_i``."""
    fields = np.asarray(fields, dtype=float)
    target = float(np.dot(spins, fields)) / len(fields)
    ceiling = float(np.mean(np.abs(fields)))  # psi at beta = infinity
    if target > 0 and target >= ceiling * (1 - 1e-12):
        return Estimate(math.inf, "MPLE", True, DIVERGED)
    return _solve_increasing(lambda b: psi(b, fields, p), target, 0.0, "mple_er", "MPLE")


def mple_er(instance) -> Estimate:
    """Pseudolikelihood estimate for a hypergraph instance (needs local fields and spins)."""
    return mple_from_fields(instance.local_fields(), instance.spins, instance.p)


def asymptotic_variance(beta: float, p: int) -> float:
    """``-H''(m_*) / (p**2 m_***(2p-2))``, shared by both estimators."""
    land = ls.find_m_star(ls.ModelSpec(p=p, beta=beta))
    s = land.log1m_star
    u = math.exp(s)
    x = -math.expm1(s)
    try:
        curv = math.exp(-s) / (2 - u) - beta * p * (p - 1) * x ** (p - 2)
    except OverflowError:
        return math.inf
    return curv / (p * p * x ** (2 * p - 2))

"""Bahadur slopes, asymptotic optimal sample sizes and relative efficiency.

For a null ``beta0`` and alternative ``beta > beta0`` (both above the
estimation threshold), with ``H0 = H_{beta0, p}`` and ``h0 = sup H0``:

    c_ML  = 2 (h0 - H0(m_*(beta)))
    c_MPL = 2 (h0 - sup{H0(x) : eta_p(x) > beta})
    N*    = -2 log(delta) / c

Sample sizes from tiny slope differences (large beta, where
``1 - m_* ~ exp(-2 beta p)``) are below float resolution; pass ``dps`` to
carry the computation in mpmath at that many digits.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from . import landscape as ls
from .errors import ConsistencyError, DomainError, WindowUndefined

CSV_COLUMNS = ["beta0", "beta", "p", "delta", "c_mple", "c_mle", "n_star_mple", "n_star_mle", "are"]
CONSISTENCY_TOL = 1e-8
NEAR_THRESHOLD = 1e-4


@dataclass(frozen=True)
class SlopePair:
    c_mple: float
    c_mle: float
    debug: dict = field(default_factory=dict)
    precise: dict | None = None


@dataclass(frozen=True)
class EfficiencyReport:
    beta0: float
    beta: float
    p: int
    delta: float
    slope_mple: float
    slope_mle: float
    n_star_mple: float
    n_star_mle: float
    are_ml_vs_mpl: float
    low_precision: bool = False
    debug: dict = field(default_factory=dict)
    precise: dict | None = None

    def row(self) -> list:
        return [self.beta0, self.beta, self.p, self.delta, self.slope_mple, self.slope_mle,
                self.n_star_mple, self.n_star_mle, self.are_ml_vs_mpl]

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["precise"] is not None:
            d["precise"] = {k: str(v) for k, v in d["precise"].items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_jsonable)


@dataclass(frozen=True)
class EfficiencyWindow:
    p: int
    beta: float
    lower: float
    upper: float

    def contains(self, beta0: float) -> bool:
        return self.lower < beta0 < self.upper


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return str(v)


def _validate(beta0, beta, p):
    if int(p) != p or p < 2:
        raise DomainError(f"p must be an integer >= 2, got {p}")
    if not beta > beta0:
        raise DomainError(f"alternative beta={beta} must exceed null beta0={beta0}")
    # raises NoInteriorMaximizer for a null at or below threshold
    return ls.find_m_star(ls.ModelSpec(p=p, beta=beta0)), ls.find_m_star(ls.ModelSpec(p=p, beta=beta))


def slopes(beta0: float, beta: float, p: int, dps: int | None = None, check: bool = True) -> SlopePair:
    """``(c_MPL, c_ML)``; the preimage sup is cross-checked against a direct grid scan."""
    land0, land1 = _validate(beta0, beta, p)
    h0 = land0.h_at_m_star
    h_alt = ls.h_at(beta0, p, land1.log1m_star)
    sup_closed = h_alt if p == 2 else max(h_alt, 0.0)
    debug = {"sup_H0": h0, "H0_at_m_star_beta": h_alt, "sup_preimage_closed": sup_closed}
    if check:
        sup_grid = ls.sup_H_over_preimage_grid(beta0, beta, p)
        debug["sup_preimage_grid"] = sup_grid
        debug["c_mple_grid"] = 2 * (h0 - sup_grid)
        if abs(sup_grid - sup_closed) > CONSISTENCY_TOL:
            raise ConsistencyError(
                f"preimage sup: closed form {sup_closed!r} vs grid {sup_grid!r} "
                f"(beta0={beta0}, beta={beta}, p={p})"
            )
    c_mle = 2 * (h0 - h_alt)
    c_mple = 2 * (h0 - sup_closed)
    precise = None
    if dps is not None:
        import mpmath

        with mpmath.workdps(dps):
            s0 = ls.log1m_star_mp(beta0, p, dps)
            s1 = ls.log1m_star_mp(beta, p, dps)
            h0_mp = ls.h_mp(beta0, p, s0, dps)
            ha_mp = ls.h_mp(beta0, p, s1, dps)
            sup_mp = ha_mp if p == 2 else max(ha_mp, mpmath.mpf(0))
            precise = {"c_mle": 2 * (h0_mp - ha_mp), "c_mple": 2 * (h0_mp - sup_mp)}
    return SlopePair(c_mple=float(c_mple), c_mle=float(c_mle), debug=debug, precise=precise)


def _n_star(log_delta, c):
    return math.inf if c <= 0 else -2.0 * log_delta / c


def optimal_sample_sizes(beta0: float, beta: float, p: int, delta: float,
                         dps: int | None = None, check: bool = True) -> EfficiencyReport:
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    sl = slopes(beta0, beta, p, dps=dps, check=check)
    log_delta = math.log(delta)
    are = math.inf if sl.c_mple <= 0 else sl.c_mle / sl.c_mple
    precise = None
    if sl.precise is not None:
        import mpmath

        with mpmath.workdps(dps):
            ld = mpmath.log(mpmath.mpf(delta))
            precise = dict(sl.precise)
            for key, c in sl.precise.items():
                precise["n_star_" + key[2:]] = mpmath.inf if c <= 0 else -2 * ld / c
    low = beta0 - ls.beta_star(p) < NEAR_THRESHOLD
    return EfficiencyReport(
        beta0=beta0, beta=beta, p=p, delta=delta,
        slope_mple=sl.c_mple, slope_mle=sl.c_mle,
        n_star_mple=_n_star(log_delta, sl.c_mple), n_star_mle=_n_star(log_delta, sl.c_mle),
        are_ml_vs_mpl=are, low_precision=low, debug=sl.debug, precise=precise,
    )


def inefficiency_window(beta: float, p: int) -> EfficiencyWindow:
    """Nulls with strictly smaller MPL slope: ``(beta*(p), I(m_*)/m_*^p)`` at fixed beta.

    The upper end is the null at which ``H_{beta0}(m_*(beta)) = 0``; at
    the endpoint itself the two slopes coincide.
    """
    if p == 2:
        raise WindowUndefined("the two slopes agree for every null when p = 2")
    land = ls.find_m_star(ls.ModelSpec(p=p, beta=beta))
    s = land.log1m_star
    u = math.exp(s)
    # I(1-u) = log 2 - gap(u), m^p = exp(p log1p(-u))
    entropy = ls.LOG2 - ls._gap_u(u, s, math)
    upper = entropy / math.exp(p * math.log1p(-u))
    return EfficiencyWindow(p=p, beta=beta, lower=ls.beta_star(p), upper=upper)


@dataclass(frozen=True)
class Limits:
    n_star_mle_limit: float
    n_star_mple_limit: float
    eff_mpl_vs_ml_limit: float


def limiting_quantities(beta0: float, p: int, delta: float) -> Limits:
    """Sample sizes and efficiency in the limit of a distant alternative."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    h = ls.find_m_star(ls.ModelSpec(p=p, beta=beta0)).h_at_m_star
    log_delta = math.log(delta)
    n_mle = log_delta / (beta0 - ls.LOG2 - h)
    if p >= 3 and beta0 < ls.LOG2:
        return Limits(n_mle, log_delta / (-h), h / (h + ls.LOG2 - beta0))
    return Limits(n_mle, n_mle, 1.0)

"""The free-energy landscape ``H(x) = beta * x**p - I(x)`` on [-1, 1].

``I(x) = ((1+x) log(1+x) + (1-x) log(1-x)) / 2`` is the binary entropy
penalty.  Everything downstream (estimator limits, slopes, sample sizes)
is a functional of this scalar field, so the evaluation here is careful
near both ends of the interval:

* near ``x = 0`` the entropy is summed as a power series, so that the
  O(x**2) cancellation against ``beta * x**2`` survives for p = 2;
* near ``x = 1`` points are carried in the chart ``s = log(1 - x)``,
  which keeps maximizers such as ``1 - 1e-50`` (large beta) resolvable.

Scalar kernels take an ``ops`` namespace (``math`` or ``mpmath.mp``) so
the same formulas serve the float and the extended-precision paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from .errors import DomainError, NoInteriorMaximizer, NonConvergence

LOG2 = math.log(2.0)
EPS_THRESHOLD = 1e-6
COARSE_POINTS = 4096
ROOT_TOL = 1e-12
BETA_STAR_TOL = 1e-10

_SERIES_X = 1e-2
_S_FLOOR = -5000.0


@dataclass(frozen=True)
class ModelSpec:
    """Order ``p``, inverse temperature ``beta`` and (optionally) size ``n``."""

    p: int
    beta: float
    n: int | None = None

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise DomainError(f"p must be an integer >= 2, got {self.p}")
        if not self.beta >= 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise DomainError(f"n must be an integer >= 1, got {self.n}")


@dataclass(frozen=True)
class Landscape:
    """Critical structure of H above threshold.

    ``log1m_star`` is ``log(1 - m_star)``; prefer it over ``m_star`` when
    the maximizer is within float resolution of 1 (then ``m_star == 1.0``
    after rounding even though the true value is below 1).
    """

    p: int
    beta: float
    m_star: float
    m_under: float | None
    h_at_m_star: float
    log1m_star: float
    log1m_under: float | None = None


@dataclass(frozen=True)
class Threshold:
    p: int
    beta_star: float


# ---------------------------------------------------------------------------
# scalar kernels, parameterised by s = log(1 - x), x in [0, 1)
# ---------------------------------------------------------------------------

def _entropy_series(x):
    x2 = x * x
    # sum_k x^(2k) / (2k (2k-1)), k = 1..7
    total = 0.0
    term = 1.0
    for k in range(1, 8):
        term *= x2
        total += term / (2 * k * (2 * k - 1))
    return total


def _gap_u(u, s, ops):
    """``log 2 - I(1 - u)`` without cancellation against log 2."""
    if u == 0:
        return 0 * u
    return u / 2 * ops.log(2) - (2 - u) / 2 * ops.log1p(-u / 2) - u / 2 * s


def _entropy_x(x, ops):
    if ops is math and x < _SERIES_X:
        return _entropy_series(x)
    return ((1 + x) * ops.log1p(x) + (1 - x) * ops.log1p(-x)) / 2


def _h_s(beta, p, s, ops=math):
    x = -ops.expm1(s)
    if x <= 0.5:
        if ops is math and p == 2 and x < _SERIES_X:
            return (beta - 0.5) * x * x - (_entropy_series(x) - x * x / 2)
        return beta * x**p - _entropy_x(x, ops)
    u = ops.exp(s)
    return (beta - ops.log(2)) + beta * ops.expm1(p * ops.log1p(-u)) + _gap_u(u, s, ops)


def _dh_s(beta, p, s, ops=math):
    x = -ops.expm1(s)
    if x <= 0.5:
        return beta * p * x ** (p - 1) - ops.atanh(x)
    u = ops.exp(s)
    return beta * p * ops.exp((p - 1) * ops.log1p(-u)) - (ops.log(2 - u) - s) / 2


def _d2h_s(beta, p, s, ops=math):
    x = -ops.expm1(s)
    u = ops.exp(s)
    return beta * p * (p - 1) * x ** (p - 2) - 1 / (u * (2 - u))


def _eta_s(p, s, ops=math):
    x = -ops.expm1(s)
    if x <= 0.5:
        return ops.atanh(x) / (p * x ** (p - 1))
    u = ops.exp(s)
    return (ops.log(2 - u) - s) / 2 / (p * ops.exp((p - 1) * ops.log1p(-u)))


# ---------------------------------------------------------------------------
# vectorised versions over a chart grid
# ---------------------------------------------------------------------------

def _h_grid(beta, p, s):
    s = np.asarray(s, dtype=float)
    x = -np.expm1(s)
    u = np.exp(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        ser = np.zeros_like(x)
        term = np.ones_like(x)
        x2 = x * x
        for k in range(1, 8):
            term = term * x2
            ser = ser + term / (2 * k * (2 * k - 1))
        mid = (1 + x) * np.log1p(x) + (1 - x) * np.log1p(-np.minimum(x, 0.5))
        ent = np.where(x < _SERIES_X, ser, mid / 2)
        if p == 2:
            low = np.where(x < _SERIES_X, (beta - 0.5) * x2 - (ser - x2 / 2), beta * x2 - ent)
        else:
            low = beta * x**p - ent
        gap = u / 2 * LOG2 - (2 - u) / 2 * np.log1p(-u / 2) - xlogy(u, u) / 2
        high = (beta - LOG2) + beta * np.expm1(p * np.log1p(-u)) + gap
    return np.where(x <= 0.5, low, high)


def _dh_grid(beta, p, s):
    s = np.asarray(s, dtype=float)
    x = -np.expm1(s)
    u = np.exp(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = beta * p * x ** (p - 1) - np.arctanh(np.minimum(x, 0.5))
        high = beta * p * np.exp((p - 1) * np.log1p(-u)) - (np.log(2 - u) - s) / 2
    return np.where(x <= 0.5, low, high)


def _eta_grid(p, s):
    s = np.asarray(s, dtype=float)
    x = -np.expm1(s)
    u = np.exp(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 0, np.minimum(x, 0.5), 1.0)
        low = np.arctanh(xs) / (p * xs ** (p - 1))
        high = (np.log(2 - u) - s) / 2 / (p * np.exp((p - 1) * np.log1p(-u)))
    return np.where(x <= 0.5, low, high)


@lru_cache(maxsize=8)
def _chart_grid(uniform_points: int = COARSE_POINTS) -> np.ndarray:
    """Grid of s = log(1-x) values, sorted by increasing x.

    Uniform in x on (0, 1), geometric in x towards 0 and geometric in |s|
    towards x = 1 (reaching u = 1 - x far below float resolution).
    """
    near0 = np.geomspace(1e-12, 1.0 / uniform_points, 60, endpoint=False)
    uniform = np.arange(1, uniform_points) / uniform_points
    s_x = np.log1p(-np.concatenate([near0, uniform]))
    s_tail = -np.geomspace(-math.log(1.0 / uniform_points), -_S_FLOOR, 400)[1:]
    s = np.unique(np.concatenate([s_x, s_tail]))
    s = s[::-1].copy()
    s.setflags(write=False)
    return s


def _root_s(f, sa, sb, what):
    try:
        root = brentq(f, sa, sb, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    except (ValueError, RuntimeError) as exc:
        raise NonConvergence(f"{what}: bracket [{sa}, {sb}] failed ({exc})") from exc
    return root


def _stationary(beta, p, grid=None):
    """Positive stationary points of H as (s, kind) with kind 'max' or 'min'."""
    s = _chart_grid() if grid is None else grid
    d = _dh_grid(beta, p, s)
    sign = np.sign(d)
    out = []
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        kind = "max" if sign[i] > 0 else "min"
        root = _root_s(lambda t: _dh_s(beta, p, t), s[i], s[i + 1], "stationary point")
        out.append((root, kind))
    return out


def _polished(beta, p, s_root):
    resid = abs(_dh_s(beta, p, s_root))
    if resid > ROOT_TOL:
        # float rounding of the two terms of H' near the root
        scale = max(1.0, beta * p)
        if resid > ROOT_TOL * scale:
            raise NonConvergence(f"|H'| = {resid:.3g} at polished root exceeds {ROOT_TOL}")
    return s_root


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def entropy(x):
    """``I(x)`` for |x| <= 1, with ``0 log 0 = 0`` at the endpoints."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1):
        raise DomainError("entropy requires |x| <= 1")
    a = np.abs(arr)
    with np.errstate(divide="ignore"):
        s = np.log1p(-a)
    out = np.where(a == 1, LOG2, -_h_grid(0.0, 2, s))  # H with beta = 0 is -I
    return float(out) if np.ndim(x) == 0 else out


def eval_H(x, spec: ModelSpec):
    """``beta * x**p - I(x)``; ``H(+-1) = (+-1)**p * beta - log 2``."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > 1) or np.any(np.isnan(arr)):
        raise DomainError("H is defined on [-1, 1]")
    a = np.abs(arr)
    flip = (arr < 0) & (spec.p % 2 == 1)
    with np.errstate(divide="ignore"):
        s = np.log1p(-a)
    pos = _h_grid(spec.beta, spec.p, s)
    neg = _h_grid(-spec.beta, spec.p, s)
    out = np.where(flip, neg, pos)
    out = np.where(a == 1, np.where(flip, -spec.beta, spec.beta) - LOG2, out)
    return float(out) if np.ndim(x) == 0 else out


def eval_H_deriv(x, spec: ModelSpec, order: int = 1):
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) >= 1):
        raise DomainError("derivatives of H diverge at |x| = 1")
    b, p = spec.beta, spec.p
    if order == 1:
        out = b * p * arr ** (p - 1) - np.arctanh(arr)
    elif order == 2:
        out = b * p * (p - 1) * arr ** (p - 2) - 1.0 / ((1 - arr) * (1 + arr))
    else:
        raise DomainError(f"order must be 1 or 2, got {order}")
    return float(out) if np.ndim(x) == 0 else out


def eta(t, p: int):
    """MPLE link ``arctanh(t) / (p t**(p-1))``; 0 at t=0 and infinite at |t|=1.

    Even p gives an even function (``+inf`` at both ends); for odd p the
    value at ``t = -1`` is ``-inf``.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1):
        raise DomainError("eta is defined on [-1, 1]")
    a = np.abs(arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where((a > 0) & (a < 1), a, 0.5)
        val = np.arctanh(safe) / (p * safe ** (p - 1))
    val = np.where(a == 0, 0.0, np.where(a == 1, np.inf, val))
    if p % 2 == 1:
        val = np.where(arr < 0, -val, val)
    return float(val) if np.ndim(t) == 0 else val


def _sup_positive_part(beta, p):
    best = beta - LOG2  # value at x = 1
    for s_root, kind in _stationary(beta, p):
        if kind == "max":
            best = max(best, _h_s(beta, p, s_root))
    return best


@lru_cache(maxsize=None)
def _beta_star_cached(p: int) -> float:
    lo, hi = 0.0, LOG2
    while hi - lo > BETA_STAR_TOL:
        mid = 0.5 * (lo + hi)
        if _sup_positive_part(mid, p) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def find_beta_star(p: int) -> Threshold:
    """Estimation threshold: the largest beta with ``sup H = 0``.

    Bisection on beta of the predicate ``sup_{(0,1]} H > 0``.
    """
    if int(p) != p or p < 2:
        raise DomainError(f"p must be an integer >= 2, got {p}")
    return Threshold(p=int(p), beta_star=_beta_star_cached(int(p)))


def beta_star(p: int) -> float:
    return find_beta_star(p).beta_star


def find_m_star(spec: ModelSpec) -> Landscape:
    """Locate the positive global maximizer (and, for p >= 3, the local minimizer below it)."""
    p, beta = spec.p, spec.beta
    bs = beta_star(p)
    if beta <= bs + EPS_THRESHOLD:
        raise NoInteriorMaximizer(
            f"beta={beta} is not above the threshold beta*({p})={bs:.8f} (+{EPS_THRESHOLD:g})"
        )
    points = _stationary(beta, p)
    maxima = [(s, _h_s(beta, p, s)) for s, kind in points if kind == "max"]
    if not maxima:
        raise NoInteriorMaximizer(f"no positive local maximum of H for beta={beta}, p={p}")
    s_star, h_star = max(maxima, key=lambda item: item[1])
    if not h_star > 0:
        raise NoInteriorMaximizer(f"sup H = 0 is attained at 0 for beta={beta}, p={p}")
    _polished(beta, p, s_star)
    s_under = None
    if p >= 3:
        below = [s for s, kind in points if kind == "min" and s > s_star]
        if below:
            s_under = min(below)  # closest to m_star from the left
    return Landscape(
        p=p,
        beta=beta,
        m_star=float(-math.expm1(s_star)),
        m_under=None if s_under is None else float(-math.expm1(s_under)),
        h_at_m_star=float(h_star),
        log1m_star=float(s_star),
        log1m_under=s_under,
    )


def m_star(beta: float, p: int) -> float:
    return find_m_star(ModelSpec(p=p, beta=beta)).m_star


def h_at(beta: float, p: int, log1m_x: float) -> float:
    """H at the point ``x = 1 - exp(log1m_x)`` in [0, 1)."""
    return float(_h_s(beta, p, log1m_x))


def sup_H(beta: float, p: int) -> float:
    """``sup_{[-1,1]} H``: 0 at or below threshold, ``H(m_star)`` above."""
    return max(0.0, _sup_positive_part(beta, p), (-beta if p % 2 else beta) - LOG2)


def sup_H_interval(beta: float, p: int, a: float, b: float) -> float:
    """Supremum of H over the interval with endpoints a < b (closure, by continuity)."""
    if not -1 <= a < b <= 1:
        raise DomainError(f"need -1 <= a < b <= 1, got ({a}, {b})")
    spec = ModelSpec(p=p, beta=beta)
    cands = [eval_H(a, spec), eval_H(b, spec)]
    if a < 0 < b:
        cands.append(0.0)
    for s_root, _ in _stationary(beta, p):
        x = -math.expm1(s_root)
        if a < x < b:
            cands.append(_h_s(beta, p, s_root))
        if p % 2 == 0 and a < -x < b:
            cands.append(_h_s(beta, p, s_root))
    return float(max(cands))


def _check_pair(beta0, beta, p):
    if not beta > beta0:
        raise DomainError(f"alternative beta={beta} must exceed null beta0={beta0}")
    bs = beta_star(p)
    if beta0 <= bs + EPS_THRESHOLD:
        raise NoInteriorMaximizer(
            f"null beta0={beta0} is not above the threshold beta*({p})={bs:.8f}"
        )


def sup_H_over_preimage(beta0: float, beta: float, p: int) -> float:
    """``sup H_{beta0}`` over ``{x : eta_p(x) > beta}`` via the landscape reduction.

    For p = 2 this is ``H_{beta0}(m_star(beta))``; for p >= 3 the preimage
    also contains ``(0, m_under(beta))`` where ``H_{beta0}`` approaches 0, so
    the value is ``max(H_{beta0}(m_star(beta)), 0)``.
    """
    _check_pair(beta0, beta, p)
    land = find_m_star(ModelSpec(p=p, beta=beta))
    h = _h_s(beta0, p, land.log1m_star)
    return float(h if p == 2 else max(h, 0.0))


def sup_H_over_preimage_grid(beta0: float, beta: float, p: int, points: int = 20001) -> float:
    """Direct evaluation of the same supremum on a grid, independent of m_star.

    The preimage is scanned on (0, 1]; on [-1, 0) it mirrors (p even) or
    is empty (p odd, where eta <= 0).  ``H_{beta0}`` has no stationary
    point inside the preimage (those satisfy ``eta = beta0 < beta``), so
    each run of the mask attains its sup at a refined run boundary.
    """
    _check_pair(beta0, beta, p)
    s = _chart_grid(points)
    mask = _eta_grid(p, s) > beta
    hvals = _h_grid(beta0, p, s)
    best = -math.inf
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return best
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]])
    g = lambda t: _eta_s(p, t) - beta  # noqa: E731
    for i0, i1 in zip(starts, ends):
        best = max(best, float(np.max(hvals[i0 : i1 + 1])))
        if i0 == 0:
            best = max(best, 0.0)  # limit at x -> 0+
        else:
            edge = _root_s(g, s[i0 - 1], s[i0], "preimage boundary")
            best = max(best, _h_s(beta0, p, edge))
        if i1 == len(s) - 1:
            best = max(best, beta0 - LOG2)  # x = 1, where eta = +inf
        else:
            edge = _root_s(g, s[i1], s[i1 + 1], "preimage boundary")
            best = max(best, _h_s(beta0, p, edge))
    return best


# ---------------------------------------------------------------------------
# extended precision
# ---------------------------------------------------------------------------

def log1m_star_mp(beta, p: int, dps: int = 60):
    """``log(1 - m_star)`` to ``dps`` digits, Newton-polished from the float root."""
    import mpmath

    s0 = find_m_star(ModelSpec(p=p, beta=float(beta))).log1m_star
    with mpmath.workdps(dps):
        b = mpmath.mpf(beta)
        f = lambda t: _dh_s(b, p, t, mpmath.mp)  # noqa: E731
        root = mpmath.findroot(f, mpmath.mpf(s0), tol=mpmath.mpf(10) ** (-dps + 5))
        return +root


def h_mp(beta, p: int, log1m_x, dps: int = 60):
    import mpmath

    with mpmath.workdps(dps):
        return +_h_s(mpmath.mpf(beta), p, mpmath.mpf(log1m_x), mpmath.mp)

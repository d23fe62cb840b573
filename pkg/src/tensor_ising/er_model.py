"""Erdos-Renyi hypergraph Ising model.

A directed p-uniform hypergraph on ``[n]`` keeps each ordered p-tuple
(loops and repeats included) independently with probability ``alpha``.
With scale ``1 / (alpha n^(p-1))`` the Hamiltonian and first-position
local fields are

    H(x)   = scale * sum_{e in E} x_{e1} ... x_{ep}
    m_i(x) = scale * sum_{e in E, e1 = i} x_{e2} ... x_{ep}

so that ``H = sum_i x_i m_i``.  Vertices are 0-based throughout the API;
the edge-list file format is 1-based.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import BudgetExceeded, DomainError

DEFAULT_MAX_EDGES = 50_000_000
_DENSE_LIMIT = 20_000_000


# ---------------------------------------------------------------------------
# graph
# ---------------------------------------------------------------------------

def _odd_incidence(edges: np.ndarray, start: int, n: int):
    """CSR (ptr, edge ids) of vertices with odd multiplicity in positions ``start:``."""
    E, p = edges.shape
    verts, eids = [], []
    sub = edges[:, start:]
    for q in range(sub.shape[1]):
        v = sub[:, q]
        count = np.zeros(E, dtype=np.int64)
        first = np.ones(E, dtype=bool)
        for r in range(sub.shape[1]):
            same = sub[:, r] == v
            count += same
            if r < q:
                first &= ~same
        keep = first & (count % 2 == 1)
        verts.append(v[keep])
        eids.append(np.nonzero(keep)[0])
    verts = np.concatenate(verts) if verts else np.zeros(0, dtype=np.int64)
    eids = np.concatenate(eids) if eids else np.zeros(0, dtype=np.int64)
    order = np.lexsort((eids, verts))
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(verts, minlength=n), out=ptr[1:])
    return ptr, eids[order].astype(np.int64)


@dataclass(frozen=True, eq=False)
class HyperGraph:
    n: int
    p: int
    alpha: float
    edges: np.ndarray  # (E, p) int64, lexicographically sorted, 0-based
    inc_ptr: np.ndarray = field(repr=False)
    inc_edge: np.ndarray = field(repr=False)
    tail_ptr: np.ndarray = field(repr=False)
    tail_edge: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, p: int, alpha: float, edges) -> "HyperGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, p)
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise DomainError("edge tuples must lie in [0, n)")
        if not 0 < alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
        edges = np.unique(edges, axis=0) if len(edges) else edges
        edges = np.ascontiguousarray(edges)
        edges.setflags(write=False)
        inc_ptr, inc_edge = _odd_incidence(edges, 0, n)
        tail_ptr, tail_edge = _odd_incidence(edges, 1, n)
        return cls(n, p, float(alpha), edges, inc_ptr, inc_edge, tail_ptr, tail_edge)

    @property
    def scale(self) -> float:
        return 1.0 / (self.alpha * float(self.n) ** (self.p - 1))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self, position: int | None = 0) -> np.ndarray:
        """Edge counts per vertex at one tuple position (``None``: any position, with multiplicity)."""
        cols = self.edges.ravel() if position is None else self.edges[:, position]
        return np.bincount(cols, minlength=self.n)

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {self.p} {self.alpha!r}"]
        lines.extend(" ".join(str(v + 1) for v in row) for row in self.edges.tolist())
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_edge_list())

    @classmethod
    def parse(cls, text: str) -> "HyperGraph":
        lines = text.splitlines()
        n_s, p_s, a_s = lines[0].split()
        n, p = int(n_s), int(p_s)
        rows = [[int(t) - 1 for t in ln.split()] for ln in lines[1:] if ln.strip()]
        edges = np.array(rows, dtype=np.int64).reshape(-1, p)
        return cls.from_edges(n, p, float(a_s), edges)

    @classmethod
    def read(cls, path) -> "HyperGraph":
        with open(path) as fh:
            return cls.parse(fh.read())


def generate(n: int, p: int, alpha: float, seed, max_edges: int = DEFAULT_MAX_EDGES) -> HyperGraph:
    """Each of the ``n**p`` ordered tuples present independently with probability alpha."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if n < 1 or p < 2:
        raise DomainError("need n >= 1 and p >= 2")
    total = n**p
    if total >= 2**62 or alpha * total > max_edges:
        raise BudgetExceeded(f"expected {alpha * total:.3g} edges exceeds budget {max_edges}")
    rng = np.random.default_rng(seed)
    if alpha == 1.0:
        flat = np.arange(total, dtype=np.int64)
    elif total <= _DENSE_LIMIT:
        flat = np.nonzero(rng.random(total) < alpha)[0]
    else:
        count = int(rng.binomial(total, alpha))
        flat = np.sort(rng.choice(total, size=count, replace=False))
    edges = np.stack(np.unravel_index(flat, (n,) * p), axis=1).astype(np.int64)
    return HyperGraph.from_edges(n, p, alpha, edges)


def complete_graph(n: int, p: int) -> HyperGraph:
    return generate(n, p, 1.0, 0)


# ---------------------------------------------------------------------------
# from-scratch evaluation
# ---------------------------------------------------------------------------

def hamiltonian_of(graph: HyperGraph, spins) -> float:
    x = np.asarray(spins, dtype=np.float64)
    if graph.num_edges == 0:
        return 0.0
    return graph.scale * float(np.prod(x[graph.edges], axis=1).sum())


def local_fields_of(graph: HyperGraph, spins) -> np.ndarray:
    x = np.asarray(spins, dtype=np.float64)
    if graph.num_edges == 0:
        return np.zeros(graph.n)
    rest = np.prod(x[graph.edges[:, 1:]], axis=1)
    return graph.scale * np.bincount(graph.edges[:, 0], weights=rest, minlength=graph.n)


def flip_gains_of(graph: HyperGraph, spins) -> np.ndarray:
    """``H(x_i = +1) - H(x_i = -1)`` for every vertex, over all tuple positions."""
    x = np.asarray(spins, dtype=np.float64)
    if graph.num_edges == 0:
        return np.zeros(graph.n)
    prod = np.prod(x[graph.edges], axis=1)
    v_of = np.repeat(np.arange(graph.n), np.diff(graph.inc_ptr))
    # rest of the product once x_v is removed (odd multiplicity: prod * x_v)
    contrib = prod[graph.inc_edge] * x[v_of]
    return 2.0 * graph.scale * np.bincount(v_of, weights=contrib, minlength=graph.n)


# ---------------------------------------------------------------------------
# instance and dynamics
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class HyperIsingInstance:
    graph: HyperGraph
    spins: np.ndarray
    hamiltonian_cache: float = 0.0
    fields: np.ndarray = None
    gains: np.ndarray = None

    @property
    def p(self) -> int:
        return self.graph.p

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def mean(self) -> float:
        return float(self.spins.mean())

    def refresh(self) -> None:
        self.hamiltonian_cache = hamiltonian_of(self.graph, self.spins)
        self.fields = local_fields_of(self.graph, self.spins)
        self.gains = flip_gains_of(self.graph, self.spins)

    def hamiltonian(self) -> float:
        """From-scratch Hamiltonian (the cache is ``hamiltonian_cache``)."""
        return hamiltonian_of(self.graph, self.spins)

    def local_fields(self) -> np.ndarray:
        return self.fields.copy()

    def local_field(self, i: int) -> float:
        if not 0 <= i < self.n:
            raise DomainError(f"vertex index must lie in [0, {self.n})")
        return float(self.fields[i])

    def copy(self) -> "HyperIsingInstance":
        return HyperIsingInstance(self.graph, self.spins.copy(), self.hamiltonian_cache,
                                  self.fields.copy(), self.gains.copy())


def new_instance(graph: HyperGraph, spins=None, init: str = "random", seed=None) -> HyperIsingInstance:
    """Instance with given spins, or initialised ``"random"`` (uniform) or ``"plus"`` (all +1)."""
    if spins is None:
        if init == "plus":
            spins = np.ones(graph.n, dtype=np.int8)
        elif init == "random":
            rng = np.random.default_rng(seed)
            spins = (2 * rng.integers(0, 2, graph.n) - 1).astype(np.int8)
        else:
            raise DomainError(f"unknown init {init!r}")
    spins = np.asarray(spins, dtype=np.int8).copy()
    if spins.shape != (graph.n,) or not np.all(np.abs(spins) == 1):
        raise DomainError("spins must be a length-n vector of +-1")
    inst = HyperIsingInstance(graph, spins)
    inst.refresh()
    return inst


def hamiltonian(instance: HyperIsingInstance) -> float:
    return instance.hamiltonian()


def local_field(instance: HyperIsingInstance, i: int) -> float:
    return instance.local_field(i)


@numba.njit(cache=True, nogil=True)
def _glauber_kernel(edges, inc_ptr, inc_edge, tail_ptr, tail_edge, spins, fields, gains,
                    h, scale, beta, sites, unif):
    p = edges.shape[1]
    for t in range(sites.shape[0]):
        i = sites[t]
        z = beta * gains[i]
        if z >= 0.0:
            prob = 1.0 / (1.0 + math.exp(-z))
        else:
            ez = math.exp(z)
            prob = ez / (1.0 + ez)
        new = 1 if unif[t] < prob else -1
        if new == spins[i]:
            continue
        h += gains[i] if new == 1 else -gains[i]
        # first-position fields of edges holding i an odd number of times in the tail
        for k in range(tail_ptr[i], tail_ptr[i + 1]):
            e = tail_edge[k]
            prod = 1.0
            for q in range(1, p):
                prod *= spins[edges[e, q]]
            fields[edges[e, 0]] -= 2.0 * scale * prod
        # flip gains of the other odd-multiplicity vertices of each edge
        for k in range(inc_ptr[i], inc_ptr[i + 1]):
            e = inc_edge[k]
            prod = 1.0
            for q in range(p):
                prod *= spins[edges[e, q]]
            for q in range(p):
                v = edges[e, q]
                if v == i:
                    continue
                seen = False
                mult = 0
                for r in range(p):
                    if edges[e, r] == v:
                        mult += 1
                        if r < q:
                            seen = True
                if seen or mult % 2 == 0:
                    continue
                gains[v] -= 4.0 * scale * prod * spins[v]
        spins[i] = new
    return h


def glauber_sweep(instance: HyperIsingInstance, beta: float, steps: int, seed) -> HyperIsingInstance:
    """Run ``steps`` heat-bath updates in place and return the instance.

    Each step picks a uniform vertex and sets it to +1 with probability
    ``1 / (1 + exp(-beta * gain))``, where ``gain`` is the Hamiltonian
    difference between the two values of that spin.
    """
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if beta < 0:
        raise DomainError("beta must be >= 0")
    g = instance.graph
    rng = np.random.default_rng(seed)
    sites = rng.integers(0, g.n, size=steps)
    unif = rng.random(steps)
    instance.hamiltonian_cache = _glauber_kernel(
        g.edges, g.inc_ptr, g.inc_edge, g.tail_ptr, g.tail_edge, instance.spins,
        instance.fields, instance.gains, float(instance.hamiltonian_cache), g.scale,
        float(beta), sites, unif,
    )
    return instance


# ---------------------------------------------------------------------------
# concentration diagnostic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationReport:
    gamma_n: float
    max_dev: float
    bound: float
    passed: bool
    exhaustive: bool
    num_configs: int


def gamma_n(n: int, p: int, alpha: float) -> float:
    return 3.0 / math.sqrt(alpha * float(n) ** (p - 1))


def _deviations(graph: HyperGraph, configs: np.ndarray) -> np.ndarray:
    x = configs.astype(np.float64)
    if graph.num_edges:
        h = graph.scale * np.prod(x[:, graph.edges], axis=2).sum(axis=1)
    else:
        h = np.zeros(len(x))
    mean = x.mean(axis=1)
    return np.abs(h - graph.n * mean**graph.p) / graph.n


def concentration_check(graph: HyperGraph, num_configs: int, seed, exhaustive_limit: int = 16,
                        chunk: int = 4096) -> ConcentrationReport:
    """Largest ``|H(x) - n Xbar^p| / n`` over configurations, against ``3 gamma_n``.

    Exhaustive over all ``2**n`` configurations when ``n <= exhaustive_limit``;
    otherwise over ``num_configs`` uniform draws (a diagnostic only).
    """
    if num_configs < 1:
        raise DomainError("num_configs must be >= 1")
    n = graph.n
    worst = 0.0
    exhaustive = n <= exhaustive_limit
    if exhaustive:
        total = 2**n
        bits = np.arange(n)
        for lo in range(0, total, chunk):
            codes = np.arange(lo, min(total, lo + chunk))
            configs = 1 - 2 * ((codes[:, None] >> bits) & 1)
            worst = max(worst, float(_deviations(graph, configs).max()))
        count = total
    else:
        rng = np.random.default_rng(seed)
        done = 0
        while done < num_configs:
            m = min(chunk, num_configs - done)
            configs = 2 * rng.integers(0, 2, size=(m, n)) - 1
            worst = max(worst, float(_deviations(graph, configs).max()))
            done += m
        count = num_configs
    g = gamma_n(n, graph.p, graph.alpha)
    return ConcentrationReport(g, worst, 3 * g, worst <= 3 * g, exhaustive, count)


def lambda_count(spins, p: int) -> int:
    """Brute-force number of ordered p-tuples whose spin product is +1."""
    x = np.asarray(spins)
    return sum(1 for t in itertools.product(range(len(x)), repeat=p) if np.prod(x[list(t)]) == 1)

"""Tensor Curie-Weiss and Erdos-Renyi hypergraph Ising models.

Exact finite-n laws, samplers, pseudolikelihood and maximum likelihood
estimators of the inverse temperature, and the Bahadur efficiency
calculus (slopes, optimal sample sizes, relative efficiency).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetExceeded,
    ConsistencyError,
    DomainError,
    NoInteriorMaximizer,
    NonConvergence,
    TensorIsingError,
    WindowUndefined,
)
from .landscape import Landscape, ModelSpec, Threshold, eta, eval_H, eval_H_deriv, find_beta_star, find_m_star  # noqa: E402

__all__ = [
    "BudgetExceeded", "ConsistencyError", "DomainError", "NoInteriorMaximizer", "NonConvergence",
    "TensorIsingError", "WindowUndefined", "Landscape", "ModelSpec", "Threshold", "eta", "eval_H",
    "eval_H_deriv", "find_beta_star", "find_m_star",
]

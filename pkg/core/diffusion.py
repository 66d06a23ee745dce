"""
Diffusion - Belief Propagation over the Affinity Graph
======================================================

Iterates F <- beta * W_norm F + (1 - beta) * Y. The fixed point
(1 - beta)(I - beta W_norm)^-1 Y minimizes

    ||F - Y||^2 + mu * F^T (I - W_norm) F,   beta = mu / (1 + mu)

``tol=None`` runs exactly ``max_iters`` iterations (production mode, T_prop);
a positive ``tol`` stops once the infinity-norm step drops below it.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Set, Tuple, List

import numpy as np
import scipy.linalg as sla

from .affinity_graph import AffinityGraph
from .error_handler import ShapeError, InvalidInjection, TooLargeForDense, ConfigError

logger = logging.getLogger(__name__)


@dataclass
class BeliefState:
    """Loop state: injection Y, belief F, visited mask, unresolved facets"""
    injection: np.ndarray
    belief: np.ndarray
    visited: np.ndarray
    unresolved_facets: Set[int] = field(default_factory=set)

    @classmethod
    def initial(cls, k_nodes: int, seed_belief: Optional[np.ndarray] = None,
                facets: int = 0) -> 'BeliefState':
        belief = np.zeros(k_nodes) if seed_belief is None else np.array(seed_belief, dtype=np.float64)
        return cls(
            injection=np.zeros(k_nodes),
            belief=belief,
            visited=np.zeros(k_nodes, dtype=bool),
            unresolved_facets=set(range(facets)),
        )

    def top(self, n: int = 5) -> List[Tuple[int, float]]:
        """Top-n (node, belief), ties by lower node id"""
        order = np.lexsort((np.arange(self.belief.size), -self.belief))[:n]
        return [(int(i), float(self.belief[i])) for i in order]


def _check_inputs(graph: AffinityGraph, vector: np.ndarray, name: str, beta: float) -> np.ndarray:
    if not 0.0 < beta < 1.0:
        raise ConfigError(f"beta must be in (0, 1), got {beta}")
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (graph.k_nodes,):
        raise ShapeError(f"{name} has shape {v.shape}, graph has {graph.k_nodes} nodes")
    if not np.all(np.isfinite(v)):
        raise InvalidInjection(f"{name} contains non-finite values")
    return v


def propagate(graph: AffinityGraph, injection: np.ndarray, beta: float = 0.6,
              max_iters: int = 1000, tol: Optional[float] = 1e-6,
              initial: Optional[np.ndarray] = None) -> Tuple[np.ndarray, int]:
    """Run the diffusion iteration; returns (belief, iterations run)"""
    y = _check_inputs(graph, injection, "injection", beta)
    f = y.copy() if initial is None else _check_inputs(graph, initial, "initial belief", beta).copy()
    if tol is not None and tol <= 0:
        raise ConfigError(f"tol must be positive, got {tol}")

    source = (1.0 - beta) * y
    iterations = 0
    for _ in range(max_iters):
        nxt = beta * (graph.w_norm @ f) + source
        step = float(np.max(np.abs(nxt - f))) if f.size else 0.0
        f = nxt
        iterations += 1
        if tol is not None and step < tol:
            break
    return f, iterations


def diffuse(graph: AffinityGraph, injection: np.ndarray, beta: float = 0.6,
            max_iters: int = 1000, tol: Optional[float] = 1e-6) -> np.ndarray:
    belief, iterations = propagate(graph, injection, beta, max_iters, tol)
    logger.debug(f"diffuse: {iterations} iterations")
    return belief


def warm_start_diffuse(graph: AffinityGraph, prior_belief: np.ndarray, new_injection: np.ndarray,
                       beta: float = 0.6, max_iters: int = 1000,
                       tol: Optional[float] = 1e-6) -> np.ndarray:
    """Same fixed point as diffuse(new_injection), iterated from prior_belief"""
    belief, iterations = propagate(graph, new_injection, beta, max_iters, tol, initial=prior_belief)
    logger.debug(f"warm_start_diffuse: {iterations} iterations")
    return belief


def closed_form_solve(graph: AffinityGraph, injection: np.ndarray, beta: float = 0.6,
                      dense_cap: int = 2048) -> np.ndarray:
    y = _check_inputs(graph, injection, "injection", beta)
    if graph.k_nodes > dense_cap:
        raise TooLargeForDense(
            f"{graph.k_nodes} nodes exceeds the dense solve cap of {dense_cap}",
            context={'k_nodes': graph.k_nodes, 'dense_cap': dense_cap}
        )
    system = np.eye(graph.k_nodes) - beta * graph.w_norm.toarray()
    return sla.solve(system, (1.0 - beta) * y, assume_a='sym')


def smoothness_energy(graph: AffinityGraph, belief: np.ndarray, injection: np.ndarray,
                      beta: float = 0.6) -> float:
    f = _check_inputs(graph, belief, "belief", beta)
    y = _check_inputs(graph, injection, "injection", beta)
    mu = beta / (1.0 - beta)
    fit = float(np.sum((f - y) ** 2))
    smooth = float(f @ f - f @ (graph.w_norm @ f))
    return fit + mu * smooth

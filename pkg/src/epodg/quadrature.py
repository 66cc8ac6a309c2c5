"""Reference-cell quadrature rules with weights normalized to sum to one.

All rules live on [-1, 1]. Weights are stored divided by 2, so that the
weighted sum of nodal values is the cell *average*; to integrate over
[-1, 1] multiply by 2 (de-normalize).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray    # reference coordinates in [-1, 1]
    weights: np.ndarray  # positive, sum to 1

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    def __len__(self):
        return len(self.nodes)


def gauss_lobatto_rule(L):
    """L-point Gauss-Lobatto rule, exact for polynomials of degree <= 2L-3.

    Nodes are the zeros of (1-x^2) P'_{L-1}(x), computed by Newton iteration
    on the Legendre Vandermonde recursion with Chebyshev initial guesses.
    """
    if not 2 <= L <= 8:
        raise ValueError(f"unsupported Gauss-Lobatto point count L={L}")
    if L == 2:
        nodes = np.array([-1.0, 1.0])
        w = np.array([1.0, 1.0])
    else:
        nodes = np.cos(np.pi * np.arange(L) / (L - 1))[::-1].copy()
        vand = np.zeros((L, L))
        prev = nodes + 1.0
        while np.max(np.abs(nodes - prev)) > 2.3e-16:
            vand[:, 0] = 1.0
            vand[:, 1] = nodes
            for k in range(1, L - 1):
                vand[:, k + 1] = ((2 * k + 1) * nodes * vand[:, k]
                                  - k * vand[:, k - 1]) / (k + 1)
            prev = nodes.copy()
            nodes = prev - (nodes * vand[:, L - 1] - vand[:, L - 2]) \
                / (L * vand[:, L - 1])
        w = 2.0 / ((L - 1) * L * vand[:, L - 1] ** 2)
        # enforce exact symmetry of the layout
        nodes = 0.5 * (nodes - nodes[::-1])
        nodes[0], nodes[-1] = -1.0, 1.0
        w = 0.5 * (w + w[::-1])
    return QuadratureRule(nodes, w / 2.0)


def gauss_rule(Q):
    """Q-point Gauss-Legendre rule, exact for polynomials of degree <= 2Q-1."""
    if not 1 <= Q <= 8:
        raise ValueError(f"unsupported Gauss point count Q={Q}")
    nodes, w = np.polynomial.legendre.leggauss(Q)
    return QuadratureRule(nodes, w / 2.0)

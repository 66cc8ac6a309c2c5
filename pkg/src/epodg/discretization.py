"""1D mesh, nodal cell representation, and the semi-discrete DG operator.

The solution in each cell is stored as nodal values at L Gauss-Lobatto
points (node 1 = left trace, node L = right trace), so the weighted nodal
sum reproduces the cell average exactly and interface traces are free.
Fields are arrays of shape (n_cells, L, m).
"""

from dataclasses import dataclass

import numpy as np

from .budgets import lf_flux, numerical_entropy_flux
from .quadrature import gauss_lobatto_rule, gauss_rule

PERIODIC = "periodic"
TRANSMISSIVE = "transmissive"
REFLECTIVE = "reflective"
_BC_KINDS = (PERIODIC, TRANSMISSIVE, REFLECTIVE)


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 1 or not self.b > self.a:
            raise ValueError("mesh needs b > a and at least one cell")

    @property
    def dx(self):
        return (self.b - self.a) / self.n_cells

    def cell_centers(self):
        return self.a + (np.arange(self.n_cells) + 0.5) * self.dx

    def node_positions(self, rule):
        """Physical coordinates of the rule's nodes in every cell, (n, L)."""
        return self.cell_centers()[:, None] + 0.5 * self.dx * rule.nodes[None, :]


def nodal_rule_for_degree(k):
    """Limiting rule for polynomial degree k: L = max(k+1, ceil((k+3)/2)) points."""
    L = max(k + 1, -(-(k + 3) // 2))
    return gauss_lobatto_rule(max(L, 2))


def cell_average(nodal, rule):
    """Weighted nodal sum; exact cell average for degrees <= 2L-3."""
    nodal = np.asarray(nodal, dtype=float)
    if nodal.shape[-2] != len(rule):
        raise ValueError("rule length does not match the nodal axis")
    return np.matmul(rule.weights, nodal)


def lagrange_basis(nodes, x):
    """Values of the Lagrange basis through `nodes` at points `x`, (len(x), L)."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    L = len(nodes)
    out = np.ones((len(x), L))
    for i in range(L):
        for j in range(L):
            if j != i:
                out[:, i] *= (x - nodes[j]) / (nodes[i] - nodes[j])
    return out


def lagrange_basis_derivative(nodes, x):
    """First derivatives of the Lagrange basis at points `x`, (len(x), L)."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    L = len(nodes)
    out = np.zeros((len(x), L))
    for i in range(L):
        for j in range(L):
            if j == i:
                continue
            term = np.ones(len(x)) / (nodes[i] - nodes[j])
            for l in range(L):
                if l not in (i, j):
                    term *= (x - nodes[l]) / (nodes[i] - nodes[l])
            out[:, i] += term
    return out


def evaluate_polynomial(nodal, rule, xi):
    """Evaluate the degree-(L-1) nodal interpolant at reference points xi.

    Accepts a single cell (L, m) or a field (n, L, m); xi may be scalar or a
    1D array. Points outside [-1, 1] extrapolate the interpolant.
    """
    nodal = np.asarray(nodal, dtype=float)
    basis = lagrange_basis(rule.nodes, xi)
    vals = np.einsum("ql,...lm->...qm", basis, nodal)
    if np.isscalar(xi) or np.ndim(xi) == 0:
        return vals[..., 0, :]
    return vals


def ghost_cell(edge_nodal, bc, side, momentum_components=()):
    """Ghost nodal array outside the given edge cell.

    Transmissive and reflective ghosts mirror the edge cell about the wall
    (node order reversed), so the ghost trace at the boundary equals the
    interior boundary trace; reflective additionally negates momentum.
    """
    ghost = edge_nodal[::-1].copy()
    if bc == REFLECTIVE:
        for c in momentum_components:
            ghost[:, c] = -ghost[:, c]
    return ghost


def candidate_average_update(avg, flux_left, flux_right, lam):
    """Conservative average update avg - lam*(F_right - F_left)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    return np.asarray(avg, dtype=float) \
        - lam * (np.asarray(flux_right, dtype=float) - np.asarray(flux_left, dtype=float))


class DGOperator:
    """Nodal DG spatial operator L(U) with a global Lax-Friedrichs flux.

    The Galerkin weak form uses the exact mass matrix (assembled from basis
    products with an over-integrating Gauss rule, which never touches state
    values) while the nonlinear volume flux term is collocated at the
    Gauss-Lobatto limiting nodes. Collocation keeps every flux evaluation on
    states the limiter certifies admissible - interior over-integration
    points of a scaled polynomial can be inadmissible near vacuum - and the
    induced cell-average derivative still equals the flux-difference form
    exactly. Degree k=0 falls back to the first-order finite-volume update.
    """

    def __init__(self, model, mesh, rule=None, bc=PERIODIC, k=None):
        if bc not in _BC_KINDS:
            raise ValueError(f"unknown boundary condition {bc!r}")
        if mesh.n_cells < 2:
            raise ValueError("the spatial operator needs at least two cells")
        self.model = model
        self.mesh = mesh
        self.bc = bc
        self.k = (len(rule) - 1 if rule is not None else 2) if k is None else k
        self.rule = rule if rule is not None else nodal_rule_for_degree(self.k)
        L = len(self.rule)
        if self.k > L - 1:
            raise ValueError("rule has too few nodes for the requested degree")
        # sensor integrals (oscillation distances) use an interior Gauss rule
        self.volume_rule = gauss_rule(min(self.k + 2, 8))
        self.momentum_components = (1,) if getattr(model, "m", 1) == 3 else ()

        nodes = self.rule.nodes
        vq = self.volume_rule
        self.eval_volume = lagrange_basis(nodes, vq.nodes)          # (Qv, L)
        basis_on_gauss = self.eval_volume
        wq = 2.0 * vq.weights
        M = basis_on_gauss.T @ (wq[:, None] * basis_on_gauss)       # exact mass matrix
        Minv = np.linalg.inv(M)
        dphi_nodes = lagrange_basis_derivative(nodes, nodes)        # (L, L)
        wl = 2.0 * self.rule.weights
        self._A = Minv @ (dphi_nodes.T * wl[None, :])               # (L, L)
        eL = np.zeros(L); eL[0] = 1.0
        eR = np.zeros(L); eR[-1] = 1.0
        self._bL = Minv @ eL
        self._bR = Minv @ eR
        # single assembly matrix acting on [nodal fluxes; right flux; left flux]
        self._assembly = np.concatenate(
            [self._A, -self._bR[:, None], self._bL[:, None]], axis=1)
        # extrapolation of this cell's polynomial onto neighbor sensor grids
        self.eval_on_left_nbr = lagrange_basis(nodes, vq.nodes - 2.0)
        self.eval_on_right_nbr = lagrange_basis(nodes, vq.nodes + 2.0)

    # -- traces and ghosts ---------------------------------------------------

    def ghosts(self, nodal):
        if self.bc == PERIODIC:
            return nodal[-1], nodal[0]
        left = ghost_cell(nodal[0], self.bc, "left", self.momentum_components)
        right = ghost_cell(nodal[-1], self.bc, "right", self.momentum_components)
        return left, right

    def interface_pairs(self, nodal):
        """Left/right states at the n+1 interfaces, each (n+1, m)."""
        gl, gr = self.ghosts(nodal)
        left = np.concatenate([gl[None, -1, :], nodal[:, -1, :]], axis=0)
        right = np.concatenate([nodal[:, 0, :], gr[None, 0, :]], axis=0)
        return left, right

    def interface_fluxes(self, nodal, alpha):
        UL, UR = self.interface_pairs(nodal)
        return lf_flux(UL, UR, alpha, self.model)

    def flux_difference(self, nodal, alpha):
        """Per-cell F_hat_{j+1/2} - F_hat_{j-1/2}, shape (n, m)."""
        fh = self.interface_fluxes(nodal, alpha)
        return fh[1:] - fh[:-1]

    def entropy_flux_difference(self, nodal, alpha, pair):
        """Per-cell Qhat_{j+1/2} - Qhat_{j-1/2}, shape (n,)."""
        UL, UR = self.interface_pairs(nodal)
        qh = numerical_entropy_flux(UL, UR, alpha, pair)
        return qh[1:] - qh[:-1]

    def interface_entropy_fluxes(self, nodal, alpha, pair):
        UL, UR = self.interface_pairs(nodal)
        return numerical_entropy_flux(UL, UR, alpha, pair)

    # -- the semi-discrete operator ------------------------------------------

    def assemble(self, nodal, interface_fluxes, nodal_fluxes=None):
        """Nodal time derivative from precomputed single-valued interface fluxes."""
        fh = interface_fluxes
        dx = self.mesh.dx
        if self.k == 0:
            ddt = -(fh[1:] - fh[:-1]) / dx
            return np.repeat(ddt[:, None, :], nodal.shape[1], axis=1)
        fq = self.model.flux(nodal) if nodal_fluxes is None else nodal_fluxes
        rhs = np.concatenate([fq, fh[1:, None, :], fh[:-1, None, :]], axis=1)
        return (2.0 / dx) * np.matmul(self._assembly, rhs)

    def __call__(self, nodal, alpha):
        """Nodal time derivative; its cell average is -(flux difference)/dx."""
        nodal = np.asarray(nodal, dtype=float)
        return self.assemble(nodal, self.interface_fluxes(nodal, alpha))

    def global_alpha(self, nodal, factor=1.0):
        """Global wave-speed bound over all limiting nodes (traces included)."""
        return factor * float(np.max(self.model.max_wave_speed(nodal)))

"""Conservation-law systems: fluxes, wave speeds, entropy pairs, admissible sets.

Systems provided: scalar laws (linear advection, Burgers), the 1D compressible
Euler equations, and the 2D Euler / 2D advection variants used on rectangular
meshes. All operations are pure and accept batched states with the component
index on the last axis.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EulerParams:
    """Ideal-gas ratio of specific heats and the numerical admissibility floor."""
    gamma: float = 1.4
    eps: float = 1e-13

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy eta with entropy flux, gradient, and domain predicate.

    ``q_flux`` returns a scalar in 1D and a 2-vector (last axis) in 2D.
    ``hess`` is needed only by the frozen-Hessian oscillation sensor.
    ``quadratic`` marks eta(U) = |U|^2/2, which unlocks the closed-form
    entropy radius. ``eta_q`` optionally fuses eta and q_flux in one pass.
    """
    name: str
    eta: callable
    q_flux: callable
    grad_eta: callable
    in_domain: callable
    hess: callable = None
    quadratic: bool = False
    eta_q: callable = None
    eta_raw: callable = None   # unchecked eta; NaN outside the domain
    kernel: tuple = None       # compiled-search tag, see _kernels

    def eta_and_q(self, U):
        if self.eta_q is not None:
            return self.eta_q(U)
        return self.eta(U), self.q_flux(U)

    def eta_nan(self, U):
        """eta without domain checks; off-domain states yield NaN."""
        if self.eta_raw is not None:
            return self.eta_raw(U)
        return self.eta(U)


@dataclass(frozen=True)
class Constraint:
    """One inequality l(U) >= 0 describing the admissible set."""
    fn: callable
    kind: str  # "affine" | "concave"
    name: str = ""


@dataclass(frozen=True)
class AdmissibleSet:
    """Closed convex set G = {U : l_r(U) >= 0 for all r}."""
    constraints: tuple
    kernel: tuple = None       # compiled-search tag, see _kernels

    @property
    def all_affine(self):
        return all(c.kind == "affine" for c in self.constraints)

    def values(self, U):
        """Stack constraint values along a trailing axis; NaN means 'outside'."""
        vals = [np.asarray(c.fn(U), dtype=float) for c in self.constraints]
        return np.stack(vals, axis=-1)

    def contains(self, U):
        # NaN compares False, so states with undefined constraints are excluded
        return np.all(self.values(U) >= 0.0, axis=-1)


# ---------------------------------------------------------------------------
# 1D compressible Euler
# ---------------------------------------------------------------------------

def euler_pressure(U, params):
    """Ideal-gas pressure (gamma-1)(E - m^2/(2 rho)); requires rho > 0."""
    U = np.asarray(U, dtype=float)
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    if (rho <= 0.0).any():
        raise ValueError("nonpositive density in euler_pressure")
    return (params.gamma - 1.0) * (E - 0.5 * m * m / rho)


def _euler_pressure_raw(U, gamma):
    # unchecked variant for constraint evaluation; rho <= 0 yields NaN
    rho, m, E = U[..., 0], U[..., 1], U[..., 2]
    rho = np.where(rho > 0.0, rho, np.nan)
    return (gamma - 1.0) * (E - 0.5 * m * m / rho)


def euler_primitive_to_conservative(rho, u, p, params):
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    E = p / (params.gamma - 1.0) + 0.5 * rho * u * u
    return np.stack([rho, rho * u, E], axis=-1)


def euler_conservative_to_primitive(U, params):
    U = np.asarray(U, dtype=float)
    rho = U[..., 0]
    u = U[..., 1] / rho
    p = euler_pressure(U, params)
    return rho, u, p


def euler_max_wave_speed(U, params):
    """|u| + c, an upper bound for the spectral radius of the flux Jacobian."""
    U = np.asarray(U, dtype=float)
    rho = U[..., 0]
    if np.any(rho <= 0.0):
        raise ValueError("nonpositive density in euler_max_wave_speed")
    u = U[..., 1] / rho
    p = euler_pressure(U, params)
    c = np.sqrt(params.gamma * np.maximum(p, 0.0) / rho)
    return np.abs(u) + c


def euler_entropy_pair(params):
    """Physical pair eta = -rho*s, s = log p - gamma*log rho, with flux -m*s."""
    gamma = params.gamma
    a = gamma - 1.0

    def _specific_entropy(U):
        rho, p = U[..., 0], euler_pressure(U, params)
        if (p <= 0.0).any():
            raise ValueError("nonpositive pressure in entropy evaluation")
        return np.log(p) - gamma * np.log(rho)

    def eta(U):
        U = np.asarray(U, dtype=float)
        return -U[..., 0] * _specific_entropy(U)

    def q_flux(U):
        U = np.asarray(U, dtype=float)
        return -U[..., 1] * _specific_entropy(U)

    def grad_eta(U):
        U = np.asarray(U, dtype=float)
        rho, m = U[..., 0], U[..., 1]
        p = euler_pressure(U, params)
        s = np.log(p) - gamma * np.log(rho)
        u = m / rho
        g = np.empty(U.shape)
        g[..., 0] = gamma - s - 0.5 * a * rho * u * u / p
        g[..., 1] = a * m / p
        g[..., 2] = -a * rho / p
        return g

    def in_domain(U):
        U = np.asarray(U, dtype=float)
        rho = U[..., 0]
        return (rho > 0.0) & (_euler_pressure_raw(U, gamma) > 0.0)

    def hess(U):
        U = np.asarray(U, dtype=float)
        rho, m = U[..., 0], U[..., 1]
        p = euler_pressure(U, params)
        u = m / rho
        q = 0.5 * m * u
        H = np.empty(U.shape[:-1] + (3, 3))
        H[..., 0, 0] = gamma / rho + a * a * q * q / (rho * p * p)
        H[..., 0, 1] = H[..., 1, 0] = -a * a * q * u / (p * p)
        H[..., 0, 2] = H[..., 2, 0] = -a / p + a * a * q / (p * p)
        H[..., 1, 1] = a / p + a * a * rho * u * u / (p * p)
        H[..., 1, 2] = H[..., 2, 1] = -a * a * m / (p * p)
        H[..., 2, 2] = a * a * rho / (p * p)
        return H

    def eta_q(U):
        U = np.asarray(U, dtype=float)
        s = _specific_entropy(U)
        return -U[..., 0] * s, -U[..., 1] * s

    def eta_raw(U):
        rho = U[..., 0]
        p = _euler_pressure_raw(U, gamma)
        # NaN-guarded logs stay silent outside the domain
        return -rho * (np.log(np.where(p > 0.0, p, np.nan))
                       - gamma * np.log(np.where(rho > 0.0, rho, np.nan)))

    return EntropyPair("physical", eta, q_flux, grad_eta, in_domain, hess,
                       eta_q=eta_q, eta_raw=eta_raw,
                       kernel=("euler-entropy", gamma, 1.0))


def euler_scaled_entropy_pair(params, scale=None):
    """Affine rescaling of the physical pair; defaults to -rho*s/(gamma-1)."""
    if scale is None:
        scale = 1.0 / (params.gamma - 1.0)
    base = euler_entropy_pair(params)
    return EntropyPair(
        "physical-scaled",
        lambda U: scale * base.eta(U),
        lambda U: scale * base.q_flux(U),
        lambda U: scale * base.grad_eta(U),
        base.in_domain,
        lambda U: scale * base.hess(U),
        eta_raw=lambda U: scale * base.eta_raw(U),
        kernel=("euler-entropy", params.gamma, scale),
    )


def euler_admissible_set(params):
    """G_eps = {rho >= eps, p(U) >= eps}: affine density floor, concave pressure."""
    eps, gamma = params.eps, params.gamma
    return AdmissibleSet((
        Constraint(lambda U: np.asarray(U, float)[..., 0] - eps, "affine", "rho"),
        Constraint(lambda U: _euler_pressure_raw(np.asarray(U, float), gamma) - eps,
                   "concave", "p"),
    ), kernel=("euler-geps", gamma, eps))


class EulerModel1D:
    """1D compressible Euler system U = (rho, m, E)."""

    def __init__(self, params):
        self.params = params
        self.m = 3

    def flux(self, U):
        U = np.asarray(U, dtype=float)
        rho, m, E = U[..., 0], U[..., 1], U[..., 2]
        p = euler_pressure(U, self.params)
        u = m / rho
        F = np.empty(U.shape)
        F[..., 0] = m
        F[..., 1] = m * u + p
        F[..., 2] = u * (E + p)
        return F

    def max_wave_speed(self, U):
        return euler_max_wave_speed(U, self.params)

    def eigen_range(self, U):
        """Extremal eigenvalues (u - c, u + c) of the flux Jacobian."""
        U = np.asarray(U, dtype=float)
        rho = U[..., 0]
        u = U[..., 1] / rho
        p = euler_pressure(U, self.params)
        c = np.sqrt(self.params.gamma * np.maximum(p, 0.0) / rho)
        return u - c, u + c


def euler_model(params):
    return EulerModel1D(params)


# ---------------------------------------------------------------------------
# Scalar conservation laws
# ---------------------------------------------------------------------------

class ScalarModel:
    """u_t + f(u)_x = 0 with f given by `flux_name`."""

    def __init__(self, flux_name, a=1.0):
        if flux_name not in ("advection", "burgers"):
            raise ValueError(f"unknown scalar flux {flux_name!r}")
        self.flux_name = flux_name
        self.a = float(a)
        self.m = 1

    def _fprime(self, u):
        return np.full_like(u, self.a) if self.flux_name == "advection" else u

    def flux(self, U):
        u = np.asarray(U, dtype=float)[..., 0]
        f = self.a * u if self.flux_name == "advection" else 0.5 * u * u
        return f[..., None]

    def max_wave_speed(self, U):
        u = np.asarray(U, dtype=float)[..., 0]
        return np.abs(self._fprime(u))

    def eigen_range(self, U):
        u = np.asarray(U, dtype=float)[..., 0]
        fp = self._fprime(u)
        return fp, fp


def _scalar_pair(name, model, eta_u, q_adv, q_bur, grad_u, hess_u, quadratic=False):
    adv = model.flux_name == "advection"

    def eta(U):
        return eta_u(np.asarray(U, float)[..., 0])

    def q_flux(U):
        u = np.asarray(U, float)[..., 0]
        return q_adv(u, model.a) if adv else q_bur(u)

    def grad(U):
        return grad_u(np.asarray(U, float)[..., 0])[..., None]

    def hess(U):
        return hess_u(np.asarray(U, float)[..., 0])[..., None, None]

    def in_domain(U):
        return np.ones(np.asarray(U).shape[:-1], dtype=bool)

    return EntropyPair(name, eta, q_flux, grad, in_domain, hess, quadratic)


def scalar_quadratic_pair(model):
    """eta = u^2/2 with flux a*u^2/2 (advection) or u^3/3 (Burgers)."""
    return _scalar_pair(
        "quadratic", model,
        lambda u: 0.5 * u * u,
        lambda u, a: 0.5 * a * u * u,
        lambda u: u ** 3 / 3.0,
        lambda u: u,
        lambda u: np.ones_like(u),
        quadratic=True,
    )


def scalar_quartic_pair(model):
    """eta = u^4/4 with flux a*u^4/4 (advection) or u^5/5 (Burgers)."""
    return _scalar_pair(
        "quartic", model,
        lambda u: 0.25 * u ** 4,
        lambda u, a: 0.25 * a * u ** 4,
        lambda u: u ** 5 / 5.0,
        lambda u: u ** 3,
        lambda u: 3.0 * u * u,
    )


def interval_admissible_set(u_min, u_max):
    """G = [u_min, u_max]; both bounds are affine constraints."""
    return AdmissibleSet((
        Constraint(lambda U: np.asarray(U, float)[..., 0] - u_min, "affine", "lower"),
        Constraint(lambda U: u_max - np.asarray(U, float)[..., 0], "affine", "upper"),
    ))


def scalar_model(flux_name, a=1.0, u_min=0.0, u_max=1.0):
    """Scalar system bundle: model, quadratic entropy pair, interval set."""
    model = ScalarModel(flux_name, a=a)
    return model, scalar_quadratic_pair(model), interval_admissible_set(u_min, u_max)


def quadratic_vector_pair(m):
    """eta = |U|^2/2 on R^m; no entropy flux (budgets must be supplied)."""
    def eta(U):
        U = np.asarray(U, dtype=float)
        return 0.5 * np.sum(U * U, axis=-1)

    def grad(U):
        return np.asarray(U, dtype=float).copy()

    def hess(U):
        U = np.asarray(U, dtype=float)
        return np.broadcast_to(np.eye(m), U.shape[:-1] + (m, m)).copy()

    def in_domain(U):
        return np.ones(np.asarray(U).shape[:-1], dtype=bool)

    return EntropyPair("quadratic", eta, None, grad, in_domain, hess, quadratic=True)


# ---------------------------------------------------------------------------
# 2D systems (rectangular meshes)
# ---------------------------------------------------------------------------

def euler2d_pressure_raw(U, gamma):
    rho = np.where(U[..., 0] > 0.0, U[..., 0], np.nan)
    ke = 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / rho
    return (gamma - 1.0) * (U[..., 3] - ke)


class EulerModel2D:
    """2D compressible Euler system U = (rho, m1, m2, E)."""

    def __init__(self, params):
        self.params = params
        self.m = 4

    def pressure(self, U):
        U = np.asarray(U, dtype=float)
        if np.any(U[..., 0] <= 0.0):
            raise ValueError("nonpositive density")
        return euler2d_pressure_raw(U, self.params.gamma)

    def flux_x(self, U):
        U = np.asarray(U, dtype=float)
        rho, m1, m2, E = (U[..., i] for i in range(4))
        p = self.pressure(U)
        u = m1 / rho
        return np.stack([m1, m1 * u + p, m2 * u, u * (E + p)], axis=-1)

    def flux_y(self, U):
        U = np.asarray(U, dtype=float)
        rho, m1, m2, E = (U[..., i] for i in range(4))
        p = self.pressure(U)
        v = m2 / rho
        return np.stack([m2, m1 * v, m2 * v + p, v * (E + p)], axis=-1)

    def directional_flux(self, U, n):
        return n[0] * self.flux_x(U) + n[1] * self.flux_y(U)

    def _sound_speed(self, U):
        p = self.pressure(U)
        return np.sqrt(self.params.gamma * np.maximum(p, 0.0) / U[..., 0])

    def max_wave_speed_x(self, U):
        U = np.asarray(U, dtype=float)
        return np.abs(U[..., 1] / U[..., 0]) + self._sound_speed(U)

    def max_wave_speed_y(self, U):
        U = np.asarray(U, dtype=float)
        return np.abs(U[..., 2] / U[..., 0]) + self._sound_speed(U)

    def normal_wave_speed(self, U, n):
        U = np.asarray(U, dtype=float)
        un = (n[0] * U[..., 1] + n[1] * U[..., 2]) / U[..., 0]
        return np.abs(un) + self._sound_speed(U)

    def eigen_range_normal(self, U, n):
        U = np.asarray(U, dtype=float)
        un = (n[0] * U[..., 1] + n[1] * U[..., 2]) / U[..., 0]
        c = self._sound_speed(U)
        return un - c, un + c


def euler2d_entropy_pair(params):
    """2D physical pair eta = -rho*s with flux vector (-m1*s, -m2*s)."""
    gamma = params.gamma
    a = gamma - 1.0

    def _s(U):
        p = euler2d_pressure_raw(U, gamma)
        if np.any(p <= 0.0) or np.any(U[..., 0] <= 0.0):
            raise ValueError("state outside the entropy domain")
        return np.log(p) - gamma * np.log(U[..., 0])

    def eta(U):
        U = np.asarray(U, dtype=float)
        return -U[..., 0] * _s(U)

    def q_flux(U):
        U = np.asarray(U, dtype=float)
        s = _s(U)
        return np.stack([-U[..., 1] * s, -U[..., 2] * s], axis=-1)

    def grad_eta(U):
        U = np.asarray(U, dtype=float)
        rho = U[..., 0]
        p = euler2d_pressure_raw(U, gamma)
        s = np.log(p) - gamma * np.log(rho)
        q = 0.5 * (U[..., 1] ** 2 + U[..., 2] ** 2) / rho
        g = np.empty(U.shape)
        g[..., 0] = gamma - s - a * q / p
        g[..., 1] = a * U[..., 1] / p
        g[..., 2] = a * U[..., 2] / p
        g[..., 3] = -a * rho / p
        return g

    def in_domain(U):
        U = np.asarray(U, dtype=float)
        return (U[..., 0] > 0.0) & (euler2d_pressure_raw(U, gamma) > 0.0)

    def hess(U):
        U = np.asarray(U, dtype=float)
        rho = U[..., 0]
        p = euler2d_pressure_raw(U, gamma)
        u = U[..., 1] / rho
        v = U[..., 2] / rho
        q = 0.5 * rho * (u * u + v * v)
        H = np.empty(U.shape[:-1] + (4, 4))
        H[..., 0, 0] = gamma / rho + a * a * q * q / (rho * p * p)
        H[..., 0, 1] = H[..., 1, 0] = -a * a * q * u / (p * p)
        H[..., 0, 2] = H[..., 2, 0] = -a * a * q * v / (p * p)
        H[..., 0, 3] = H[..., 3, 0] = -a / p + a * a * q / (p * p)
        H[..., 1, 1] = a / p + a * a * rho * u * u / (p * p)
        H[..., 1, 2] = H[..., 2, 1] = a * a * rho * u * v / (p * p)
        H[..., 1, 3] = H[..., 3, 1] = -a * a * U[..., 1] / (p * p)
        H[..., 2, 2] = a / p + a * a * rho * v * v / (p * p)
        H[..., 2, 3] = H[..., 3, 2] = -a * a * U[..., 2] / (p * p)
        H[..., 3, 3] = a * a * rho / (p * p)
        return H

    return EntropyPair("physical2d", eta, q_flux, grad_eta, in_domain, hess)


def euler2d_admissible_set(params):
    eps, gamma = params.eps, params.gamma
    return AdmissibleSet((
        Constraint(lambda U: np.asarray(U, float)[..., 0] - eps, "affine", "rho"),
        Constraint(lambda U: euler2d_pressure_raw(np.asarray(U, float), gamma) - eps,
                   "concave", "p"),
    ))


def euler2d_model(params):
    return EulerModel2D(params)


class Advection2DModel:
    """Scalar 2D advection u_t + a1 u_x + a2 u_y = 0."""

    def __init__(self, a1=1.0, a2=1.0):
        self.a1, self.a2 = float(a1), float(a2)
        self.m = 1

    def flux_x(self, U):
        return self.a1 * np.asarray(U, dtype=float)

    def flux_y(self, U):
        return self.a2 * np.asarray(U, dtype=float)

    def directional_flux(self, U, n):
        return (n[0] * self.a1 + n[1] * self.a2) * np.asarray(U, dtype=float)

    def max_wave_speed_x(self, U):
        return np.full(np.asarray(U).shape[:-1], abs(self.a1))

    def max_wave_speed_y(self, U):
        return np.full(np.asarray(U).shape[:-1], abs(self.a2))

    def normal_wave_speed(self, U, n):
        return np.full(np.asarray(U).shape[:-1],
                       abs(n[0] * self.a1 + n[1] * self.a2))

    def eigen_range_normal(self, U, n):
        lam = np.full(np.asarray(U).shape[:-1], n[0] * self.a1 + n[1] * self.a2)
        return lam, lam


def advection2d_pair(model):
    """Quadratic pair for 2D advection: eta = u^2/2, flux (a1, a2) u^2/2."""
    def eta(U):
        u = np.asarray(U, float)[..., 0]
        return 0.5 * u * u

    def q_flux(U):
        u = np.asarray(U, float)[..., 0]
        e = 0.5 * u * u
        return np.stack([model.a1 * e, model.a2 * e], axis=-1)

    def grad(U):
        return np.asarray(U, dtype=float).copy()

    def in_domain(U):
        return np.ones(np.asarray(U).shape[:-1], dtype=bool)

    def hess(U):
        U = np.asarray(U, dtype=float)
        return np.ones(U.shape[:-1] + (1, 1))

    return EntropyPair("quadratic2d", eta, q_flux, grad, in_domain, hess,
                       quadratic=True)

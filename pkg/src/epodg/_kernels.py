"""Optional compiled kernels for the per-cell radius searches.

The generic searches in `limiter` work for any entropy pair or admissible
set; these kernels specialize the two hot cases of production Euler runs
(the G_eps geometric radius and the -rho*s entropy radius) as scalar
bisection loops. Results agree with the generic path to the bisection
tolerance; everything degrades gracefully to numpy when numba is missing.
"""

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is normally available
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

TOL = 1e-12
MAX_ITER = 60


@njit(cache=True)
def _euler_geps_ok(anchor, dev, theta, eps, gamma):
    L = dev.shape[0]
    for l in range(L):
        rho = anchor[0] + theta * dev[l, 0]
        if rho < eps:
            return False
        m = anchor[1] + theta * dev[l, 1]
        E = anchor[2] + theta * dev[l, 2]
        p = (gamma - 1.0) * (E - 0.5 * m * m / rho)
        if not p >= eps:   # NaN-safe: NaN fails
            return False
    return True


@njit(cache=True)
def euler_geometric_refine(anchor, dev, eps, gamma):
    """Geometric radii for cells of the Euler G_eps set, scalar bisection."""
    n = anchor.shape[0]
    out = np.empty(n)
    for i in range(n):
        lo, hi = 0.0, 1.0
        for _ in range(MAX_ITER):
            if hi - lo <= TOL:
                break
            mid = 0.5 * (lo + hi)
            if _euler_geps_ok(anchor[i], dev[i], mid, eps, gamma):
                lo = mid
            else:
                hi = mid
        # certified feasible endpoint; halve on roundoff failure
        guard = 0
        while lo > 0.0 and not _euler_geps_ok(anchor[i], dev[i], lo, eps, gamma):
            lo *= 0.5
            guard += 1
            if guard > 200:
                lo = 0.0
        out[i] = lo
    return out


@njit(cache=True)
def _euler_entropy_at(anchor, dev, theta, w, gamma, scale):
    L = dev.shape[0]
    acc = 0.0
    for l in range(L):
        rho = anchor[0] + theta * dev[l, 0]
        m = anchor[1] + theta * dev[l, 1]
        E = anchor[2] + theta * dev[l, 2]
        if rho <= 0.0:
            return np.inf
        p = (gamma - 1.0) * (E - 0.5 * m * m / rho)
        if not p > 0.0:
            return np.inf
        acc += w[l] * (-rho * (np.log(p) - gamma * np.log(rho)))
    return scale * acc


@njit(cache=True)
def euler_entropy_refine(anchor, dev, b_eff, w, gamma, scale):
    """Secondary entropy parameters along the truncated ray, scalar bisection."""
    n = anchor.shape[0]
    out = np.empty(n)
    for i in range(n):
        lo, hi = 0.0, 1.0
        for _ in range(MAX_ITER):
            if hi - lo <= TOL:
                break
            mid = 0.5 * (lo + hi)
            if _euler_entropy_at(anchor[i], dev[i], mid, w, gamma, scale) \
                    <= b_eff[i]:
                lo = mid
            else:
                hi = mid
        out[i] = lo
    return out

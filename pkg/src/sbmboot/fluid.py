"""Analytical quantities of the activation process in the large-graph limit.

Notation used throughout this module:

* ``b(u, q_i)``     probability that a node of community i has collected at
                    least r marks once u_j nodes have been explored in each
                    community j, i.e. the tail of a sum of independent
                    binomials.
* ``g_i``           critical seed scale of community i,
                    (1 - 1/r) * ((r-1)! / (n_i p_i^r))^(1/(r-1)).
* ``chi``           k x k matrix of asymptotic cross-community influence
                    coefficients; the diagonal is identically 1.
* ``rho_i(x)``      limit of the normalized expected count of active but not
                    yet explored nodes,
                    alpha_i - x_i + (1/r) (1 - 1/r)^(r-1) (sum_j chi_ij x_j)^r.

All functions are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom


@dataclass(frozen=True)
class FluidModel:
    """Asymptotic parameters driving the analytical computations.

    alpha[i] >= 0 is the limit of seeds over the critical scale of community
    i (at least one entry positive for a nondegenerate model), chi the
    influence matrix.  chi must be entrywise nonnegative with unit diagonal;
    its off-diagonal support must be symmetric (chi_ij > 0 iff chi_ji > 0).
    Irreducibility of chi is checked lazily by consumers that require it.
    """

    k: int
    r: int
    alpha: np.ndarray
    chi: np.ndarray

    def __init__(self, k: int, r: int, alpha, chi):
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "r", int(r))
        a = np.array(alpha, dtype=float).reshape(-1)
        c = np.array(chi, dtype=float).reshape(self.k, self.k)
        a.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "chi", c)
        if self.r < 2:
            raise ValueError(f"threshold r must be >= 2, got {self.r}")
        if a.shape != (self.k,):
            raise ValueError(f"alpha must have length {self.k}")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("alpha entries must be finite and >= 0")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValueError("chi entries must be finite and >= 0")
        if not np.allclose(np.diag(c), 1.0, rtol=0, atol=1e-12):
            raise ValueError("chi must have unit diagonal")
        support = c > 0
        if not np.array_equal(support, support.T):
            raise ValueError("chi support must be symmetric: "
                             "chi_ij > 0 iff chi_ji > 0")

    def chi_irreducible(self) -> bool:
        return _support_connected(self.chi)

    def boundary_level(self) -> float:
        """The common level r/(r-1) of the domain's diagonal constraints."""
        return self.r / (self.r - 1.0)


def _support_connected(chi: np.ndarray) -> bool:
    k = chi.shape[0]
    seen = np.zeros(k, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(chi[i] > 0)[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


@dataclass(frozen=True)
class AsymptoticLimits:
    """Limit ratios of a parameter sequence.

    nu[i][j] = lim n_i/n_j, gamma[i][j] = lim q_ij/p_i in [0, 1],
    mu[i][j] = lim p_i/p_j.  Consistency (nu_ij nu_ji = 1, mu_ij mu_ji = 1)
    is enforced at construction.
    """

    nu: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray

    def __init__(self, nu, gamma, mu):
        nu = np.array(nu, dtype=float)
        gamma = np.array(gamma, dtype=float)
        mu = np.array(mu, dtype=float)
        for name, m in (("nu", nu), ("gamma", gamma), ("mu", mu)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be a square matrix")
        if not np.allclose(nu * nu.T, 1.0, rtol=1e-9):
            raise ValueError("nu_ij * nu_ji must equal 1")
        if not np.allclose(mu * mu.T, 1.0, rtol=1e-9):
            raise ValueError("mu_ij * mu_ji must equal 1")
        if np.any(gamma < 0) or np.any(gamma > 1):
            raise ValueError("gamma entries must lie in [0, 1]")
        for m in (nu, gamma, mu):
            m.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "mu", mu)

    @classmethod
    def identical(cls, k: int, psi: float) -> "AsymptoticLimits":
        """Limits of k same-sized communities with cross/intra ratio psi."""
        ones = np.ones((k, k))
        gamma = np.full((k, k), float(psi))
        np.fill_diagonal(gamma, 1.0)
        return cls(nu=ones, gamma=gamma, mu=ones)


def chi_from_limits(limits: AsymptoticLimits, r: int) -> np.ndarray:
    """Influence matrix chi_ij = gamma_ij (nu_ij mu_ij^r)^(1/(r-1))."""
    r = int(r)
    return limits.gamma * (limits.nu * limits.mu ** r) ** (1.0 / (r - 1))


def critical_seed_scale(n_i: float, p_i: float, r: int) -> float:
    """Critical number of seeds for a community of n_i nodes with intra
    probability p_i: (1 - 1/r) * ((r-1)! / (n_i p_i^r))^(1/(r-1))."""
    r = int(r)
    if n_i < 1 or not 0.0 < p_i < 1.0:
        raise ValueError("need n_i >= 1 and p_i in (0, 1)")
    return (1.0 - 1.0 / r) * (math.factorial(r - 1)
                              / (n_i * p_i ** r)) ** (1.0 / (r - 1))


def _binom_head(u: int, q: float, r: int) -> tuple[np.ndarray, np.ndarray]:
    """pmf[m] = P(Bin(u, q) = m) for m < r and sf[a] = P(Bin(u, q) >= r - a).

    Uses the library implementation except for probabilities so small that
    its evaluation breaks down; there the leading binomial term is already
    exact to double precision (relative corrections are O(u q) < 1e-140).
    """
    m = np.arange(r)
    if q >= 1e-150:
        return binom.pmf(m, u, q), binom.sf(m[::-1], u, q)
    pmf = np.zeros(r)
    term = 1.0
    for j in range(r):
        pmf[j] = term if j <= u else 0.0
        term *= (u - j) / (j + 1) * q
    sf = np.zeros(r)
    for a in range(r):
        t = r - a  # threshold for partial sum a
        term = 1.0
        for j in range(t):
            term *= (u - j) / (j + 1) * q
        sf[a] = term if t <= u else 0.0
    return pmf, sf


def exact_b(u, q_row, r: int) -> float:
    """Exact tail P(sum_j Bin(u_j, q_j) >= r) of independent binomials.

    Maintains the distribution of the running sum capped at r (states
    0..r-1 plus an absorbing ">= r" state), absorbing one community's
    binomial at a time.  The absorbed mass is accumulated as a sum of
    nonnegative terms, so tiny q and tiny results do not cancel.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.int64))
    q_row = np.atleast_1d(np.asarray(q_row, dtype=float))
    r = int(r)
    if u.shape != q_row.shape:
        raise ValueError("u and q_row must have the same length")
    if np.any(u < 0):
        raise ValueError("u entries must be >= 0")
    if np.any(q_row < 0) or np.any(q_row >= 1):
        raise ValueError("q entries must lie in [0, 1)")

    dist = np.zeros(r)  # probabilities of partial sum values 0..r-1
    dist[0] = 1.0
    tail = 0.0          # probability that the partial sum reached >= r
    m = np.arange(r)
    for u_j, q_j in zip(u, q_row):
        if u_j == 0 or q_j == 0.0:
            continue
        pmf, sf = _binom_head(int(u_j), float(q_j), r)
        tail += float(np.dot(dist, sf))
        new = np.zeros(r)
        for a in range(r):
            if dist[a] == 0.0:
                continue
            hi = r - a
            new[a:r] += dist[a] * pmf[:hi]
        dist = new
    return min(tail, 1.0)


def asymptotic_b(x, g, q_row, r: int) -> tuple[float, float]:
    """Leading-order tail probability and the size of its correction.

    With u_j = floor(x_j g_j), returns
    (sum_j u_j q_j)^r / r!  together with the magnitude
    sum_{j: x_j > 0} (u_j q_j + 1/u_j) of the relative correction term.
    Only meaningful deep in the sparse regime; used as a cross-check target
    for exact_b.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=float))
    q_row = np.atleast_1d(np.asarray(q_row, dtype=float))
    if np.any(x < 0):
        raise ValueError("x must be >= 0")
    u = np.floor(x * g)
    leading = float(np.dot(u, q_row)) ** int(r) / math.factorial(int(r))
    active = x > 0
    with np.errstate(divide="ignore"):
        corr = np.where(active, u * q_row + np.where(u > 0, 1.0 / np.maximum(u, 1), np.inf), 0.0)
    return leading, float(np.sum(corr[active])) if active.any() else 0.0


def _weighted_sums(x: np.ndarray, model: FluidModel) -> np.ndarray:
    """s_i = sum_j chi_ij x_j; the diagonal of chi is 1 by construction."""
    return model.chi @ x


def rho(x, model: FluidModel) -> np.ndarray:
    """Drift vector rho_i(x) = alpha_i - x_i + c_r (sum_j chi_ij x_j)^r
    with c_r = (1/r) (1 - 1/r)^(r-1)."""
    x = np.asarray(x, dtype=float).reshape(model.k)
    r = model.r
    c_r = (1.0 / r) * (1.0 - 1.0 / r) ** (r - 1)
    s = _weighted_sums(x, model)
    return model.alpha - x + c_r * s ** r


def jacobian_rho(x, model: FluidModel) -> np.ndarray:
    """Jacobian of the drift: J_ij = -delta_ij + (1-1/r)^(r-1) s_i^(r-1) chi_ij."""
    x = np.asarray(x, dtype=float).reshape(model.k)
    r = model.r
    s = _weighted_sums(x, model)
    scale = (1.0 - 1.0 / r) ** (r - 1) * s ** (r - 1)
    jac = scale[:, None] * model.chi
    jac[np.diag_indices(model.k)] -= 1.0
    return jac


def expected_remainder(u, params) -> np.ndarray:
    """Finite-size expected count of active but unexplored nodes.

    R_i(u) = a_i + (n_i - a_i) b(u, q_i) - u_i for the given explored-node
    vector u, using the exact binomial tail.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.int64))
    k = params.k
    if u.shape != (k,):
        raise ValueError(f"u must have length {k}")
    sizes = np.asarray(params.sizes, dtype=np.int64)
    if np.any(u > sizes):
        raise ValueError("u may not exceed community sizes")
    seeds = np.asarray(params.seeds, dtype=np.int64)
    q = params.q
    out = np.empty(k)
    for i in range(k):
        b_i = exact_b(u, q[i], params.r)
        out[i] = seeds[i] + (sizes[i] - seeds[i]) * b_i - u[i]
    return out

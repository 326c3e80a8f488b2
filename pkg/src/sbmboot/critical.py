"""Critical surface in seed-intensity space for invertible coupling.

For an invertible chi the critical set admits an explicit parametrization
by a positive direction vector theta = (1, theta_2, ..., theta_k): with
x_theta,i = (r/(r-1)) (theta chi^-1 diag(theta^-1))_i^(1/(r-1)) and
z = x_theta (chi^-1)^t, the seed vector

    alpha_i = z_i - (1/r)(1 - 1/r)^(r-1) (x_theta)_i^r

lies on the critical surface: the drift vanishes at z and theta is a
positive left null vector of the Jacobian there, so the dominant eigenvalue
is zero.  Sweeping theta traces the critical curve (k = 2) or a point cloud
(k > 2); ray bisection against the classifier locates the critical crossing
of an arbitrary direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import (IntegratorOptions, VERDICT_NEAR_CRITICAL, VERDICT_SUB,
                       VERDICT_SUP, classify, pf_eigen)
from .fluid import FluidModel, jacobian_rho

MAX_COMMUNITIES = 16
_COND_LIMIT = 1e12


@dataclass
class CriticalPoint:
    """One point of the critical surface with its certificates.

    rho_residual is the drift norm at z recomputed through the coupling
    matrix (exercising the inversion round trip), null_residual the norm of
    theta^t J(z), lambda_pf the dominant eigenvalue at z.  in_unit_box
    flags alpha inside [0, 1]^k, the range the critical surface lives in.
    """

    theta: np.ndarray
    x_theta: np.ndarray
    alpha: np.ndarray
    z: np.ndarray
    lambda_pf: float
    rho_residual: float
    null_residual: float
    cond_chi: float

    @property
    def in_unit_box(self) -> bool:
        return bool(np.all(self.alpha >= 0.0) and np.all(self.alpha <= 1.0))


def _inverse_with_cond(chi: np.ndarray) -> tuple[np.ndarray, float]:
    if chi.shape[0] > MAX_COMMUNITIES:
        raise ValueError(f"supported up to k = {MAX_COMMUNITIES} communities")
    cond = float(np.linalg.cond(chi))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise np.linalg.LinAlgError(
            f"chi is singular or too ill-conditioned (cond = {cond:.3g})")
    return np.linalg.inv(chi), cond


def critical_point(theta, chi, r: int) -> CriticalPoint:
    """Critical seed vector for direction theta = (1, theta_2, ..., theta_k).

    Requires invertible chi, theta_1 = 1 and theta_i > 0; raises ValueError
    when some component of theta chi^-1 diag(theta^-1) is nonpositive (the
    fractional power is then undefined).  The returned point carries the
    residuals of the internal verification.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    chi = np.asarray(chi, dtype=float)
    r = int(r)
    k = chi.shape[0]
    if theta.shape != (k,):
        raise ValueError(f"theta must have length {k}")
    if theta[0] != 1.0:
        raise ValueError("theta_1 must equal 1")
    if np.any(theta <= 0.0):
        raise ValueError("theta components must be positive")
    inv_chi, cond = _inverse_with_cond(chi)

    xp = (theta @ inv_chi) / theta
    if np.any(xp <= 0.0):
        raise ValueError("theta chi^-1 diag(theta^-1) has a nonpositive "
                         "component; critical point undefined for this theta")
    x_theta = (r / (r - 1.0)) * xp ** (1.0 / (r - 1))
    z = inv_chi @ x_theta
    c_r = (1.0 / r) * (1.0 - 1.0 / r) ** (r - 1)
    alpha = z - c_r * x_theta ** r

    # verification recomputed through chi itself, not through x_theta
    s = chi @ z
    rho_residual = float(np.max(np.abs(alpha - z + c_r * s ** r)))
    probe = FluidModel(k, r, np.zeros(k), chi)  # Jacobian ignores alpha
    jac = jacobian_rho(z, probe)
    null_residual = float(np.max(np.abs(theta @ jac)))
    lam, _ = pf_eigen(jac)
    return CriticalPoint(theta=theta, x_theta=x_theta, alpha=alpha, z=z,
                         lambda_pf=lam, rho_residual=rho_residual,
                         null_residual=null_residual, cond_chi=cond)


def critical_curve(chi, r: int, theta_grid=None) -> list[CriticalPoint]:
    """Sweep the direction parameter and keep points with alpha in [0,1]^k.

    For k = 2 the sweep runs theta_2 over a log grid (default
    logspace(-3, 3, 400)) and returns the curve sorted by alpha_1; general
    k needs an explicit iterable of theta vectors and yields a point cloud.
    Directions where the parametrization is undefined are skipped.
    """
    chi = np.asarray(chi, dtype=float)
    k = chi.shape[0]
    if theta_grid is None:
        if k != 2:
            raise ValueError("default grid only covers k = 2; "
                             "pass explicit theta vectors for larger k")
        theta_grid = [np.array([1.0, t]) for t in np.logspace(-3, 3, 400)]
    points: list[CriticalPoint] = []
    for theta in theta_grid:
        try:
            pt = critical_point(theta, chi, r)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if pt.in_unit_box:
            points.append(pt)
    points.sort(key=lambda p: float(p.alpha[0]))
    return points


def _critical_scale_on_ray(direction: np.ndarray, chi: np.ndarray, r: int,
                           c_max: float, rel_tol: float = 1e-6,
                           options: IntegratorOptions | None = None,
                           c_min: float = 0.0) -> float:
    """Scale c* where the ray c * direction crosses the critical surface.

    Bisection on the classifier verdict; assumes Sub at c_min and Sup at
    c_max (the caller guarantees the bracket).  A NearCritical verdict ends
    the search at that scale.
    """
    k = chi.shape[0]

    def verdict_at(c: float) -> str:
        return classify(FluidModel(k, r, c * direction, chi), options).verdict

    lo, hi = float(c_min), float(c_max)
    if verdict_at(hi) == VERDICT_SUB:
        raise ValueError(f"ray still subcritical at c_max = {c_max}")
    if lo > 0.0 and verdict_at(lo) != VERDICT_SUB:
        raise ValueError(f"ray not subcritical at c_min = {c_min}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v = verdict_at(mid)
        if v == VERDICT_NEAR_CRITICAL:
            return mid
        if v == VERDICT_SUB:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    return 0.5 * (lo + hi)


def region_membership(alpha, chi, r: int, tol: float = 1e-3,
                      options: IntegratorOptions | None = None) -> str:
    """Locate alpha relative to the critical surface by ray bisection.

    Scales alpha along its ray from the origin, finds the critical crossing
    c* and returns Sub when c* > 1 + tol, Sup when c* < 1 - tol and
    NearCritical otherwise.  Falls back to a direct classification when chi
    is not invertible (the single-crossing structure is only guaranteed for
    invertible chi).
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    chi = np.asarray(chi, dtype=float)
    r = int(r)
    k = chi.shape[0]
    if np.all(alpha == 0.0):
        return VERDICT_SUB
    try:
        _inverse_with_cond(chi)
    except np.linalg.LinAlgError:
        return classify(FluidModel(k, r, alpha, chi), options).verdict
    # supercritical as soon as the largest scaled component reaches 1
    c_max = 1.05 / float(np.max(alpha))
    if c_max <= 1.0:
        c_max = 1.05
    c_star = _critical_scale_on_ray(alpha, chi, r, c_max,
                                    rel_tol=min(tol / 10.0, 1e-4),
                                    options=options)
    if c_star > 1.0 + tol:
        return VERDICT_SUB
    if c_star < 1.0 - tol:
        return VERDICT_SUP
    return VERDICT_NEAR_CRITICAL


def identical_chi(k: int, psi: float) -> np.ndarray:
    """Coupling matrix of k identical communities: 1 on the diagonal and
    psi off it."""
    chi = np.full((k, k), float(psi))
    np.fill_diagonal(chi, 1.0)
    return chi


def equal_split_ratio(k: int, psi: float, r: int) -> float:
    """Normalized total critical seed count when seeds are split equally:
    (k / (1 + (k-1) psi))^(r/(r-1)), relative to the critical count of a
    single community holding all n nodes."""
    return (k / (1.0 + (k - 1) * psi)) ** (r / (r - 1.0))


def extreme_allocations(k: int, psi: float, r: int,
                        rel_tol: float = 1e-6,
                        options: IntegratorOptions | None = None,
                        bracket: tuple[float, float] | None = None
                        ) -> tuple[float, float]:
    """Normalized total critical seed counts of the two extreme allocations.

    Returns (equal_split_total, all_in_one_total) for k identical
    communities with cross/intra ratio psi, both normalized by the critical
    seed count of a single community with the same total size and intra
    probability.  Equal split has the closed form above; all-in-one places
    every seed in one community, whose critical intensity is found by ray
    bisection, and scales by k^(1/(r-1)) since each community is k times
    smaller than the whole graph.
    """
    if not 0.0 < psi < 1.0:
        raise ValueError("psi must lie in (0, 1)")
    if k < 2:
        raise ValueError("need at least two communities")
    r = int(r)
    equal = equal_split_ratio(k, psi, r)
    chi = identical_chi(k, psi)
    direction = np.zeros(k)
    direction[0] = 1.0
    # supercritical holds whenever alpha_1 >= 1; an optional bracket (for
    # instance from a neighboring k in a sweep) narrows the search
    alpha_star = None
    if bracket is not None:
        lo, hi = bracket
        try:
            alpha_star = _critical_scale_on_ray(
                direction, chi, r, c_max=min(hi, 1.05), rel_tol=rel_tol,
                options=options, c_min=max(lo, 0.0))
        except ValueError:
            alpha_star = None
    if alpha_star is None:
        alpha_star = _critical_scale_on_ray(direction, chi, r, c_max=1.05,
                                            rel_tol=rel_tol, options=options)
    all_in_one = alpha_star * k ** (1.0 / (r - 1.0))
    return equal, all_in_one

"""Regime classification through the drift-field trajectory.

The decision procedure integrates the autonomous system x'(y) = rho(x(y))
from a strictly positive starting point built by a geometric recursion over
community distances.  Two terminal events are possible:

* the trajectory reaches the face of the domain where some diagonal entry
  of the Jacobian vanishes (the weighted sum x_i + sum_{j != i} chi_ij x_j
  hits r/(r-1)) while the drift is still positive: the process percolates
  (verdict Sup);
* the drift dies out at an interior zero z: the sign of the dominant
  (Perron-Frobenius) eigenvalue of the Jacobian at z separates a strictly
  stable stall (verdict Sub) from the degenerate boundary case (verdict
  NearCritical, an honest third answer since exact criticality is
  numerically undecidable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .errors import InconclusiveError, PowerIterationError, ReducibleMatrixError
from .fluid import FluidModel, AsymptoticLimits, jacobian_rho, rho


@dataclass(frozen=True)
class CommunityGraphMeta:
    """Distances of communities from the source on the coupling graph.

    The coupling graph has one node per community and an edge wherever
    chi_ij > 0.  levels[h] lists the communities at distance h from the
    source (the re-indexed leading community); distances[i] is the distance
    of community i and dbar the largest one.
    """

    source: int
    distances: np.ndarray
    dbar: int
    levels: tuple[tuple[int, ...], ...]


def community_levels(chi: np.ndarray, source: int = 0) -> CommunityGraphMeta:
    """BFS partition of communities by distance from ``source`` on the
    support graph of chi.  Raises ReducibleMatrixError when some community
    is unreachable (chi reducible)."""
    chi = np.asarray(chi, dtype=float)
    k = chi.shape[0]
    dist = np.full(k, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [int(source)]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for i in frontier:
            for j in np.nonzero(chi[i] > 0)[0]:
                j = int(j)
                if j != i and dist[j] < 0:
                    dist[j] = d
                    nxt.append(j)
        frontier = nxt
    if np.any(dist < 0):
        bad = tuple(int(i) for i in np.nonzero(dist < 0)[0])
        raise ReducibleMatrixError(
            f"chi is reducible: communities {bad} unreachable from {source}")
    dbar = int(dist.max())
    levels = tuple(tuple(int(i) for i in np.nonzero(dist == h)[0])
                   for h in range(dbar + 1))
    return CommunityGraphMeta(source=int(source), distances=dist,
                              dbar=dbar, levels=levels)


def initial_point(model: FluidModel, meta: CommunityGraphMeta | None = None,
                  with_details: bool = False):
    """Build the strictly positive starting point of the trajectory.

    With chi_min the smallest positive entry of chi, set beta_0 = alpha_m/2
    for the leading community m (largest alpha) and
    beta_h = ((1/r)(1-1/r)^(r-1)/2) (chi_min beta_{h-1})^r; the starting
    point assigns beta_h to every community at distance h from m.  The
    drift is then strictly positive at the point; if floating-point
    underflow spoils strictness, all beta are shrunk by a common factor
    until it holds (the factor is reported in the details).
    """
    if meta is None:
        m = int(np.argmax(model.alpha))
        meta = community_levels(model.chi, source=m)
    m = meta.source
    if model.alpha[m] <= 0:
        raise ValueError("leading community must have alpha > 0; "
                         "an all-zero alpha is subcritical by convention")
    r = model.r
    chi_min = float(np.min(model.chi[model.chi > 0]))
    coef = (1.0 / r) * (1.0 - 1.0 / r) ** (r - 1) / 2.0
    betas = np.zeros(meta.dbar + 1)
    betas[0] = model.alpha[m] / 2.0
    for h in range(1, meta.dbar + 1):
        betas[h] = coef * (chi_min * betas[h - 1]) ** r

    def assemble(scale: float) -> np.ndarray:
        x0 = np.zeros(model.k)
        for h, members in enumerate(meta.levels):
            for i in members:
                x0[i] = scale * betas[h]
        return x0

    shrink = 1.0
    x0 = assemble(shrink)
    for _ in range(200):
        if np.all(x0 > 0.0) and np.all(rho(x0, model) > 0.0):
            break
        shrink *= 0.5
        x0 = assemble(shrink)
    else:
        raise ValueError("could not find a strictly positive starting point")
    if with_details:
        return x0, betas, shrink
    return x0


@dataclass(frozen=True)
class IntegratorOptions:
    """Tolerances of the trajectory integrator and the verdict bands."""

    rtol: float = 1e-9
    atol: float = 1e-12
    tol_event: float = 1e-10     # bisection tolerance on the exit functional
    tol_zero: float = 1e-9       # stall tolerance on the max drift component
    polish_attempt_tol: float = 1e-6   # start trying Newton below this
    tol_polish: float = 1e-12    # residual for accepting a polished zero
    tol_crit: float = 1e-6       # near-critical band on the PF eigenvalue
    max_steps: int = 500_000
    record_grid: bool = True


@dataclass
class Trajectory:
    """Solution of the drift system with exit diagnostics.

    y_exit is finite for an exit through the domain face and math.inf for a
    stall at an interior zero; exit_kind is 'boundary', 'stall' or
    'inconclusive'.  min_rho is the smallest drift component seen along the
    accepted grid.
    """

    ys: np.ndarray
    xs: np.ndarray
    y_exit: float
    x_exit: np.ndarray
    exit_kind: str
    min_rho: float
    n_steps: int
    polish_residual: float | None = None


_DP_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
              -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192,
                   -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_DP_ERR = _DP_B5 - _DP_B4


def _rk45_step(f, x, h):
    """One Dormand-Prince step: returns (5th order solution, error estimate)."""
    stages = np.empty((7, x.shape[0]))
    stages[0] = f(x)
    for i, row in enumerate(_DP_A, start=1):
        stages[i] = f(x + h * (row @ stages[:i]))
    x5 = x + h * (_DP_B5 @ stages)
    return x5, h * (_DP_ERR @ stages)


def _boundary_gap(x: np.ndarray, model: FluidModel) -> float:
    """max_i (sum_j chi_ij x_j) - r/(r-1); nonnegative means outside."""
    return float(np.max(model.chi @ x) - model.boundary_level())


def _newton_polish(model: FluidModel, x: np.ndarray, max_iter: int = 80):
    """Damped Newton iteration on rho(x) = 0; returns (point, residual)."""
    z = x.copy()
    res = rho(z, model)
    nrm = float(np.max(np.abs(res)))
    for _ in range(max_iter):
        if nrm == 0.0:
            break
        jac = jacobian_rho(z, model)
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        lam = 1.0
        improved = False
        for _ in range(40):
            cand = z + lam * step
            cand_res = rho(cand, model)
            cand_nrm = float(np.max(np.abs(cand_res)))
            if cand_nrm < nrm:
                z, res, nrm = cand, cand_res, cand_nrm
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    return z, nrm


def integrate_cauchy(model: FluidModel, x0: np.ndarray,
                     options: IntegratorOptions | None = None) -> Trajectory:
    """Integrate x' = rho(x) from x0 at y = 0 until exit or stall.

    The run ends when either the largest weighted sum sum_j chi_ij x_j
    reaches r/(r-1) (exit through the domain face, localized by bisection
    on the step to tol_event) or the drift norm falls below the stall
    tolerance (y_exit = inf; the endpoint is refined by damped Newton).
    Exhausting the step budget yields exit_kind 'inconclusive'.
    """
    opts = options or IntegratorOptions()
    x0 = np.asarray(x0, dtype=float).reshape(model.k)

    # closure equivalent to rho(x, model), kept lean for the stage loop
    alpha, chi, r = model.alpha, model.chi, model.r
    c_r = (1.0 / r) * (1.0 - 1.0 / r) ** (r - 1)

    def f(x):
        return alpha - x + c_r * (chi @ x) ** r

    ys = [0.0]
    xs = [x0.copy()]
    min_rho = float(np.min(f(x0)))

    gap0 = _boundary_gap(x0, model)
    if gap0 >= -opts.tol_event:
        return Trajectory(ys=np.array(ys), xs=np.array(xs), y_exit=0.0,
                          x_exit=x0.copy(), exit_kind="boundary",
                          min_rho=min_rho, n_steps=0)

    y = 0.0
    x = x0.copy()
    fx = f(x)
    h = 0.01 * (1.0 + float(np.max(np.abs(x)))) / (1.0 + float(np.max(np.abs(fx))))
    last_attempt_norm = math.inf
    steps = 0
    rejected_in_row = 0

    while steps < opts.max_steps:
        steps += 1
        x_new, err = _rk45_step(f, x, h)
        scale = opts.atol + opts.rtol * np.maximum(np.abs(x), np.abs(x_new))
        err_norm = float(np.max(np.abs(err) / scale)) if model.k else 0.0
        if not np.isfinite(err_norm) or err_norm > 1.0:
            h *= max(0.2, 0.9 * (err_norm + 1e-16) ** -0.2) if np.isfinite(err_norm) else 0.2
            rejected_in_row += 1
            if rejected_in_row > 200:
                break
            continue
        rejected_in_row = 0

        if _boundary_gap(x_new, model) > 0.0:
            lo, hi = 0.0, h
            x_exit = x_new
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                x_mid, _ = _rk45_step(f, x, mid)
                gap = _boundary_gap(x_mid, model)
                if gap > 0.0:
                    hi = mid
                    x_exit = x_mid
                else:
                    lo = mid
                    if gap > -opts.tol_event:
                        x_exit = x_mid
                        break
                if hi - lo < 1e-16 * max(h, 1.0):
                    break
            y_exit = y + 0.5 * (lo + hi)
            ys.append(y_exit)
            xs.append(x_exit.copy())
            min_rho = min(min_rho, float(np.min(f(x_exit))))
            return Trajectory(ys=np.array(ys), xs=np.array(xs), y_exit=y_exit,
                              x_exit=x_exit, exit_kind="boundary",
                              min_rho=min_rho, n_steps=steps)

        y += h
        x = x_new
        fx = f(x)
        nr = float(np.max(np.abs(fx)))
        min_rho = min(min_rho, float(np.min(fx)))
        if opts.record_grid:
            ys.append(y)
            xs.append(x.copy())

        if nr < opts.polish_attempt_tol and nr < 0.5 * last_attempt_norm:
            last_attempt_norm = nr
            z, resid = _newton_polish(model, x)
            acceptable = (
                resid <= opts.tol_polish
                and np.all(np.isfinite(z))
                and np.all(z >= -1e-9)
                and _boundary_gap(z, model) < 0.0
                and float(np.max(np.abs(z - x))) < 0.5 * model.boundary_level()
                and np.all(z >= x - 1e-6))
            if acceptable:
                ys.append(math.inf)
                xs.append(z.copy())
                return Trajectory(ys=np.array(ys), xs=np.array(xs),
                                  y_exit=math.inf, x_exit=z,
                                  exit_kind="stall", min_rho=min_rho,
                                  n_steps=steps, polish_residual=resid)
        if nr < opts.tol_zero:
            z, resid = _newton_polish(model, x)
            if not (np.all(np.isfinite(z)) and np.all(z >= -1e-9)
                    and _boundary_gap(z, model) < 0.0):
                z, resid = x.copy(), nr
            ys.append(math.inf)
            xs.append(z.copy())
            return Trajectory(ys=np.array(ys), xs=np.array(xs),
                              y_exit=math.inf, x_exit=z, exit_kind="stall",
                              min_rho=min_rho, n_steps=steps,
                              polish_residual=resid)

        h *= min(5.0, max(0.2, 0.9 * err_norm ** -0.2 if err_norm > 0 else 5.0))

    return Trajectory(ys=np.array(ys), xs=np.array(xs), y_exit=math.nan,
                      x_exit=x.copy(), exit_kind="inconclusive",
                      min_rho=min_rho, n_steps=steps)


def pf_eigen(jac: np.ndarray, tol: float = 1e-12,
             max_iter: int = 200_000) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a Jacobian with nonnegative off-diagonals.

    Shifts by l > max_i |J_ii| so P = J + l I is nonnegative (and primitive
    when the support is irreducible), runs power iteration from the uniform
    vector to the given relative tolerance, and undoes the shift.  Returns
    the eigenvalue and the positive eigenvector normalized to unit 1-norm.
    """
    jac = np.asarray(jac, dtype=float)
    k = jac.shape[0]
    off = jac - np.diag(np.diag(jac))
    if np.any(off < 0):
        raise ValueError("off-diagonal entries must be nonnegative")
    ell = float(np.max(np.abs(np.diag(jac)))) + 1.0
    p = jac + ell * np.eye(k)
    v = np.full(k, 1.0 / k)
    lam_tilde = ell
    for _ in range(max_iter):
        w = p @ v
        s = float(np.sum(w))
        if s <= 0:
            raise PowerIterationError("iterate left the positive cone")
        w /= s
        if float(np.max(np.abs(w - v))) <= tol:
            lam_tilde = s
            v = w
            return lam_tilde - ell, v
        v = w
        lam_tilde = s
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations")


@dataclass
class Classification:
    """Verdict with the quantities that decided it.

    margin is min_i rho_i at the exit point for Sup and the PF eigenvalue
    at the stall zero for Sub / NearCritical.  ray_min_rho is a secondary
    diagnostic: the most negative drift component found on the short ray
    z + theta * phi_pf (negative under Sub, near zero at criticality).
    """

    verdict: str
    x_exit: np.ndarray
    x_star: float | None
    lambda_pf: float
    phi_pf: np.ndarray
    margin: float
    trajectory: Trajectory
    leading_community: int
    shrink_factor: float = 1.0
    ray_min_rho: float | None = None

    def to_dict(self) -> dict:
        traj = self.trajectory
        return {
            "verdict": self.verdict,
            "x_exit": [float(v) for v in self.x_exit],
            "x_star": None if self.x_star is None else float(self.x_star),
            "lambda_pf": float(self.lambda_pf),
            "phi_pf": [float(v) for v in self.phi_pf],
            "margin": float(self.margin),
            "leading_community": int(self.leading_community),
            "ray_min_rho": None if self.ray_min_rho is None
            else float(self.ray_min_rho),
            "trajectory": {
                "exit_kind": traj.exit_kind,
                "y_exit": ("inf" if math.isinf(traj.y_exit)
                           else float(traj.y_exit)),
                "n_steps": int(traj.n_steps),
                "min_rho": float(traj.min_rho),
                "polish_residual": (None if traj.polish_residual is None
                                    else float(traj.polish_residual)),
            },
        }


VERDICT_SUB = "Sub"
VERDICT_SUP = "Sup"
VERDICT_NEAR_CRITICAL = "NearCritical"


def x_star(model: FluidModel, trajectory: Trajectory,
           limits: AsymptoticLimits | None = None) -> float:
    """Limiting normalized final size in the subcritical regime.

    Sums the stall-point coordinates weighted by the scale ratios
    (nu_mi mu_mi^r)^(1/(r-1)) of each community relative to the leading
    community m (largest alpha); identical communities reduce to the plain
    coordinate sum.
    """
    m = int(np.argmax(model.alpha))
    z = np.asarray(trajectory.x_exit, dtype=float)
    if limits is None:
        coef = np.ones(model.k)
    else:
        coef = (limits.nu[m] * limits.mu[m] ** model.r) \
            ** (1.0 / (model.r - 1))
    return float(np.dot(z, coef))


def classify(model: FluidModel, options: IntegratorOptions | None = None,
             limits: AsymptoticLimits | None = None) -> Classification:
    """Decide Sub / Sup / NearCritical for a fluid model.

    Runs initial_point and integrate_cauchy.  An exit through the domain
    face with strictly positive drift is Sup.  A stall at an interior zero
    z is Sub when the PF eigenvalue of the Jacobian at z is below -tol_crit
    and NearCritical when it lies within the band.  An all-zero alpha is
    Sub by convention.  Raises InconclusiveError when integration exhausts
    its budget and ReducibleMatrixError for reducible chi.
    """
    opts = options or IntegratorOptions()
    if not model.chi_irreducible():
        community_levels(model.chi)  # raises with the offending communities

    if np.all(model.alpha == 0.0):
        k = model.k
        traj = Trajectory(ys=np.array([0.0]), xs=np.zeros((1, k)),
                          y_exit=math.inf, x_exit=np.zeros(k),
                          exit_kind="stall", min_rho=0.0, n_steps=0)
        return Classification(
            verdict=VERDICT_SUB, x_exit=np.zeros(k), x_star=0.0,
            lambda_pf=-1.0, phi_pf=np.full(k, 1.0 / k), margin=-1.0,
            trajectory=traj, leading_community=0)

    m = int(np.argmax(model.alpha))
    meta = community_levels(model.chi, source=m)
    x0, _, shrink = initial_point(model, meta, with_details=True)
    traj = integrate_cauchy(model, x0, opts)

    if traj.exit_kind == "inconclusive":
        raise InconclusiveError(
            f"no exit or stall within {opts.max_steps} steps; "
            "the instance cannot be classified")

    if traj.exit_kind == "boundary":
        rho_exit = rho(traj.x_exit, model)
        margin = float(np.min(rho_exit))
        lam, phi = pf_eigen(jacobian_rho(traj.x_exit, model))
        verdict = VERDICT_SUP if margin > 0.0 else VERDICT_NEAR_CRITICAL
        return Classification(
            verdict=verdict, x_exit=traj.x_exit.copy(), x_star=None,
            lambda_pf=lam, phi_pf=phi, margin=margin, trajectory=traj,
            leading_community=m, shrink_factor=shrink)

    z = traj.x_exit
    lam, phi = pf_eigen(jacobian_rho(z, model))
    scale = model.boundary_level()
    ray_min = math.inf
    for theta in (1e-4, 1e-3, 1e-2):
        probe = z + theta * scale * phi
        ray_min = min(ray_min, float(np.min(rho(probe, model))))
    if lam < -opts.tol_crit:
        verdict = VERDICT_SUB
        xs_val = x_star(model, traj, limits)
    else:
        verdict = VERDICT_NEAR_CRITICAL
        xs_val = None
    return Classification(
        verdict=verdict, x_exit=z.copy(), x_star=xs_val, lambda_pf=lam,
        phi_pf=phi, margin=lam, trajectory=traj, leading_community=m,
        shrink_factor=shrink, ray_min_rho=ray_min)

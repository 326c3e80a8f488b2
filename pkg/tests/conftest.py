import numpy as np
import pytest

from sbmboot import FluidModel, SbmParams, generate_sbm, run_bootstrap
from sbmboot.critical import identical_chi
from sbmboot.sbm import from_edges


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure steady state."""
    g = from_edges([4], 2, [(0, 1), (1, 2), (2, 3)])
    run_bootstrap(g, [0, 2])
    params = SbmParams(sizes=[30, 30], edge_probs=[[0.1, 0.05], [0.05, 0.1]],
                       r=2, seeds=[0, 0])
    generate_sbm(params, seed=0)


def random_chi(rng: np.random.Generator, k: int, lo: float = 0.05,
               hi: float = 0.6, skew: float = 1.4) -> np.ndarray:
    """Random coupling matrix: unit diagonal, symmetric support, connected."""
    chi = identical_chi(k, 0.0)
    for i in range(k):
        for j in range(i + 1, k):
            v = rng.uniform(lo, hi)
            chi[i, j] = v
            chi[j, i] = v * rng.uniform(1.0 / skew, skew)
    return chi


def random_point_in_domain(rng: np.random.Generator, model: FluidModel,
                           margin: float = 0.05) -> np.ndarray:
    """Uniform-ish point of the domain, kept away from the face by margin."""
    level = model.boundary_level()
    for _ in range(200):
        x = rng.uniform(0.0, level, model.k)
        s = model.chi @ x
        if np.max(s) < (1.0 - margin) * level:
            return x
    x = rng.uniform(0.0, level, model.k)
    scale = (1.0 - margin) * level / max(float(np.max(model.chi @ x)), 1e-9)
    return x * min(scale, 1.0)

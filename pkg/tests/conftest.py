import pytest

import egarchfit as eg

# invertible-with-margin reference point used across the suite
THETA_STAR = eg.ModelParams(0.0, 0.5, -0.1, 0.3)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed criteria measure compute, not JIT."""
    s = eg.simulate(THETA_STAR, eg.InnovationSpec(), n=50, burn_in=10, seed=0)
    eg.filter_series(THETA_STAR, s)
    eg.ql_with_derivatives(THETA_STAR, s)
    eg.score_at_truth(THETA_STAR, s)
    eg.check_inv_empirical(THETA_STAR, s)
    eg.fit(s, theta0=THETA_STAR, max_iter=5)


@pytest.fixture(scope="session")
def theta_star():
    return THETA_STAR


@pytest.fixture(scope="session")
def sample_star():
    return eg.simulate(THETA_STAR, eg.InnovationSpec(), n=10_000, burn_in=1000, seed=20240)


def random_admissible(rng, beta_low=0.05, beta_high=0.9):
    """Draw a stationary, filter-admissible parameter point away from clamp kinks."""
    alpha = rng.uniform(-0.5, 0.5)
    beta = rng.uniform(beta_low, beta_high)
    gamma = rng.uniform(-0.4, 0.4)
    delta = abs(gamma) + rng.uniform(0.0, 0.6)
    return eg.ModelParams(alpha, beta, gamma, delta)

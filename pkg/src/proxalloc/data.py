"""Bundled reference data: two 8-asset parameter sets, the published
solution grids used by the reproduction command, and the synthetic lasso
generator.

Parameter set #1 is a capitalization-weighted 8-stock index.  Its source
lists only seven benchmark weights (23, 19, 17, 9, 8, 6, 5)%; the missing
13% is inserted as asset 4, which reproduces the quoted 6.435 effective
bets exactly (1 / sum w^2 = 6.4350...).  That reconstruction is a
documented assumption, not a published number.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadDims
from .portfolios import AssetUniverse


@dataclass
class ParameterSet:
    universe: AssetUniverse
    benchmark: Optional[np.ndarray] = None


def _corr_from_lower(rows, n):
    rho = np.eye(n)
    for i, row in enumerate(rows, start=1):
        for j, value in enumerate(row):
            rho[i, j] = rho[j, i] = value
    return rho


def parameter_set_1():
    """Eight correlated stocks of a cap-weighted index (high correlations)."""
    sigma = np.array([0.21, 0.20, 0.40, 0.18, 0.35, 0.23, 0.07, 0.29])
    rho = _corr_from_lower([
        [0.80],
        [0.70, 0.75],
        [0.60, 0.65, 0.90],
        [0.70, 0.50, 0.70, 0.85],
        [0.50, 0.60, 0.70, 0.80, 0.60],
        [0.70, 0.50, 0.70, 0.75, 0.80, 0.50],
        [0.60, 0.65, 0.70, 0.75, 0.65, 0.70, 0.80],
    ], 8)
    universe = AssetUniverse(names=[f"stock_{i}" for i in range(1, 9)],
                             mu=np.zeros(8), sigma=sigma, rho=rho)
    benchmark = np.array([0.23, 0.19, 0.17, 0.13, 0.09, 0.08, 0.06, 0.05])
    return ParameterSet(universe=universe, benchmark=benchmark)


def _set_2_universe(last_vol):
    sigma = np.array([0.25, 0.20, 0.15, 0.18, 0.30, 0.20, 0.15, last_vol])
    rho = np.full((8, 8), 0.60)
    np.fill_diagonal(rho, 1.0)
    rho[1, 0] = rho[0, 1] = 0.20
    rho[2, 0] = rho[0, 2] = 0.55
    return AssetUniverse(names=[f"stock_{i}" for i in range(1, 9)],
                         mu=np.zeros(8), sigma=sigma, rho=rho)


def parameter_set_2():
    """Eight stocks with moderate uniform correlations (60% off-diagonal)."""
    return ParameterSet(universe=_set_2_universe(0.35))


def mdp_table_universe():
    """The universe the published most-diversified grid was computed with.

    Identical to parameter set #2 except the eighth volatility is 25%
    rather than the published data set's 35%: with 25% every grid cell
    reproduces to better than 0.005pp (long/short column matches the
    closed form solve(cov, sigma) normalized), while 35% moves cells by
    up to 1.84pp.  The two sources disagree; the fixture keeps the
    published constants and this variant carries the grid.
    """
    return _set_2_universe(0.25)


def lasso_synthetic(n=10000, p=50, seed=0, noise_sd=0.20, n_large=4,
                    large_value=6.0):
    """Standardized regression fixture with a handful of dominant betas.

    Uniform [0, 1] design, Gaussian noise with sd ``noise_sd``, raw betas
    uniform on [-3, 3] except ``n_large`` positions set to +/-6 (twice
    the base range).  X columns and Y are standardized to mean 0 and unit
    variance; the returned beta_true refers to the pre-standardization
    model.  Deterministic per seed.
    """
    if n <= p:
        raise BadDims(f"need n > p, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, p))
    beta = rng.uniform(-3.0, 3.0, size=p)
    large = rng.choice(p, size=n_large, replace=False)
    beta[large] = large_value * np.where(rng.uniform(size=n_large) < 0.5, -1.0, 1.0)
    y = x @ beta + rng.normal(0.0, noise_sd, size=n)
    x = (x - x.mean(axis=0)) / x.std(axis=0)
    y = (y - y.mean()) / y.std()
    return x, y, beta


# ---------------------------------------------------------------------------
# published solution grids (weights in percent)
# ---------------------------------------------------------------------------

MINVAR_GRID_BETS = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.5, 7.0, 7.5, 8.0]

MINVAR_GRID_WEIGHTS = np.array([
    [0.00,   3.22,  9.60, 13.83, 15.18, 15.05, 14.69, 14.27, 13.75, 12.50],
    [0.00,  12.75, 14.14, 15.85, 16.19, 15.89, 15.39, 14.82, 14.13, 12.50],
    [0.00,   0.00,  0.00,  0.00,  0.00,  0.07,  2.05,  4.21,  6.79, 12.50],
    [0.00,  10.13, 15.01, 17.38, 17.21, 16.09, 15.40, 14.72, 13.97, 12.50],
    [0.00,   0.00,  0.00,  0.00,  0.71,  5.10,  6.33,  7.64,  9.17, 12.50],
    [0.00,   5.36,  8.95, 12.42, 13.68, 14.01, 13.80, 13.56, 13.25, 12.50],
    [100.00, 68.53, 52.31, 40.01, 31.52, 25.13, 22.92, 20.63, 18.00, 12.50],
    [0.00,   0.00,  0.00,  0.50,  5.51,  8.66,  9.41, 10.14, 10.95, 12.50],
])

MINVAR_GRID_RIDGE = [0.00, 1.59, 3.10, 5.90, 10.38, 18.31, 23.45, 31.73, 49.79,
                     np.inf]

MINVAR_BENCHMARK_BETS = 6.435

MINVAR_BENCHMARK_WEIGHTS = np.array(
    [14.74, 15.45, 1.79, 15.49, 6.17, 13.83, 23.21, 9.31])

ERC_WEIGHTS_SET1 = np.array([11.40, 12.29, 5.49, 11.91, 6.65, 10.81, 33.52, 7.93])

MDP_GRID_BETS = [None, 0.0, 3.0, 4.0, 5.0, 6.0, 7.0]  # None = long/short

MDP_GRID_WEIGHTS = np.array([
    [41.81, 41.04, 35.74, 30.29, 26.08, 22.44, 18.83],
    [51.88, 50.92, 43.91, 36.68, 31.05, 26.12, 21.19],
    [8.20,   8.05, 10.12, 11.52, 12.33, 12.80, 13.01],
    [-0.43,  0.00,  2.48,  5.12,  7.16,  8.90, 10.51],
    [-0.26,  0.00,  0.92,  2.28,  3.60,  5.02,  6.85],
    [-0.38,  0.00,  2.03,  4.36,  6.28,  8.02,  9.79],
    [-0.51,  0.00,  3.47,  6.68,  8.85, 10.44, 11.65],
    [-0.31,  0.00,  1.32,  3.07,  4.65,  6.27,  8.17],
])

MDP_GRID_EFFECTIVE_BETS = [None, 2.30, 3.00, 4.00, 5.00, 6.00, 7.00]


def universe_to_dict(universe):
    return {
        "names": list(universe.names),
        "mu": universe.mu.tolist(),
        "sigma": universe.sigma.tolist(),
        "rho": universe.rho.tolist(),
        "rate": universe.rate,
    }


def universe_from_dict(payload):
    return AssetUniverse(names=list(payload["names"]),
                         mu=payload["mu"], sigma=payload["sigma"],
                         rho=payload["rho"], rate=payload.get("rate", 0.0))

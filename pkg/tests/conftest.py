from pathlib import Path

import numpy as np
import pytest

from vinegraph import io as vio
from vinegraph.factor import simulate_one_factor

DATA = Path(__file__).parent / "data"

# 1-factor loadings of the ten-variable comparison example
LOADINGS = np.array([0.90, 0.86, 0.81, 0.77, 0.72, 0.68, 0.63, 0.59, 0.54, 0.50])


def random_corr(rng, d):
    """Random PD correlation matrix with moderate conditioning."""
    A = rng.standard_normal((d, d + 3))
    S = A @ A.T
    s = np.sqrt(np.diag(S))
    C = S / np.outer(s, s)
    np.fill_diagonal(C, 1.0)
    return C


def edge_set(g):
    """Edges as frozensets of node names."""
    return set(g.named_pairs())


def pairs(*items):
    return {frozenset(p) for p in items}


@pytest.fixture(scope="session")
def sigma():
    return simulate_one_factor(LOADINGS)


@pytest.fixture(scope="session")
def sigma_star():
    return simulate_one_factor(LOADINGS, include_latent=True)


@pytest.fixture(scope="session")
def printed_sigma_star():
    return vio.read_corr(DATA / "printed_sigma_star.csv")


@pytest.fixture(scope="session")
def printed_sigma(printed_sigma_star):
    return printed_sigma_star.submatrix(list(range(10)))


@pytest.fixture(scope="session")
def printed_partial_sigma():
    return vio.read_corr(DATA / "printed_partial_sigma.csv").values


@pytest.fixture(scope="session")
def printed_partial_sigma_star():
    return vio.read_corr(DATA / "printed_partial_sigma_star.csv").values

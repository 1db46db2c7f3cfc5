from importlib.resources import files

import numpy as np
import pytest

import modalpf as m


@pytest.fixture(scope="session")
def ex1():
    """4-state linear oscillator model bundled with the package."""
    return m.parse_model((files("modalpf.fixtures") / "ex1.json").read_text())


@pytest.fixture(scope="session")
def ex2():
    """Same linear part plus one quadratic coupling term."""
    return m.parse_model((files("modalpf.fixtures") / "ex2.json").read_text())


def random_system(rng, n, max_order=2, coeff_scale=0.4):
    """Random stable system with well-separated eigenvalues and sparse monomials."""
    while True:
        A = rng.standard_normal((n, n))
        w = np.linalg.eigvals(A)
        A = A - (np.max(w.real) + 1.0) * np.eye(n)
        w = np.linalg.eigvals(A)
        gaps = [abs(w[i] - w[j]) for i in range(n) for j in range(i + 1, n)]
        if min(gaps) > 1e-2 * np.linalg.norm(A, 2):
            break
    tensors = {}
    for d in range(2, max_order + 1):
        table = {}
        for _ in range(2 * n):
            k = int(rng.integers(n))
            mi = tuple(sorted(int(j) for j in rng.integers(0, n, d)))
            table[(k, mi)] = table.get((k, mi), 0.0) + coeff_scale * rng.standard_normal()
        tensors[d] = table
    return m.PolynomialSystem(n=n, A=A, tensors=tensors)


def random_factorization(rng, basis, theta):
    """Random (sigma, xi) with xi * sigma * cos_delta equal to the given theta vector."""
    n = basis.n
    sigma = np.exp(rng.uniform(-0.7, 0.7, n)) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    xi = np.asarray(theta, dtype=complex) / (sigma * basis.cos_delta)
    return sigma, xi

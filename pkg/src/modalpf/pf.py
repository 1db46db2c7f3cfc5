"""Participation factors: linear, nonlinear, and the theta-parameterized form.

A linear participation factor couples state ``k`` to mode ``i`` through the
product of eigenvector elements ``Phi[k, i] * Psi[i, k]``.  The nonlinear
generalization perturbs a single state with amplitude ``alpha``, maps the
perturbation into normal-form coordinates, and reads off the amplitude of a
linear mode or of a combination mode (a sum of eigenvalues appearing in the
nonlinear response).

Everything a participation factor can depend on is captured by the per-mode
products ``theta_i = xi_i * sigma_i * cos_delta_i``: the linear column ``i``
is proportional to ``theta_i``, and nonlinear values are pinned once the
whole theta vector is pinned.  ``nonlinear_pf_theta`` evaluates that
parameterization directly from the unit-norm references, which is both a
fast path and an executable check of the invariance property.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .normalform import NormalFormExpansion, z_initial
from .spectrum import DEGENERATE_COS_TOL, DegenerateModeError

__all__ = [
    "PFReport",
    "build_report",
    "linear_pf",
    "nonlinear_pf",
    "nonlinear_pf_theta",
    "normalize_pf",
    "theta_residual",
]


def linear_pf(Phi: np.ndarray, Psi: np.ndarray) -> np.ndarray:
    """Linear participation matrix ``P[k, i] = Phi[k, i] * Psi[i, k]``.

    Column ``i`` sums to ``Psi_i @ Phi_i = theta_i`` exactly.
    """
    Phi = np.asarray(Phi)
    Psi = np.asarray(Psi)
    if Phi.shape != Psi.shape or Phi.ndim != 2 or Phi.shape[0] != Phi.shape[1]:
        raise ValueError("Phi and Psi must be square matrices of equal shape")
    return Phi * Psi.T


def normalize_pf(values) -> np.ndarray:
    """Divide a vector by its largest-magnitude entry (that entry becomes 1+0j)."""
    v = np.asarray(values, dtype=complex)
    if v.size == 0 or not np.any(v != 0):
        raise ValueError("cannot normalize an all-zero vector")
    pivot = v[int(np.argmax(np.abs(v)))]
    return v / pivot


def _canonical_modes(expansion: NormalFormExpansion, modes) -> tuple[int, ...]:
    if np.isscalar(modes) or isinstance(modes, (int, np.integer)):
        m = (int(modes),)
    else:
        m = tuple(sorted(int(l) for l in modes))
    n = expansion.n
    if any(not 0 <= l < n for l in m):
        raise ValueError(f"mode tuple {m} out of range for {n} modes")
    if len(m) > expansion.order:
        raise ValueError(
            f"combination order {len(m)} exceeds the expansion order {expansion.order}"
        )
    return m


def nonlinear_pf(expansion: NormalFormExpansion, k: int, modes, alpha: complex = 1.0) -> complex:
    """Nonlinear participation factor of state ``k`` in a linear or combination mode.

    ``modes`` is a single mode index (returns ``Phi[k, i] * mu[i]`` with
    ``mu`` the z-space image of the perturbation ``alpha * e_k``) or a tuple
    of mode indices ``(r, s, ...)`` (returns
    ``sum_i Phi[k, i] * h_i * mu[r] * mu[s] * ...``).  Contributions whose
    h-coefficient was excluded as resonant are skipped; the skipped raw
    coefficients remain available on the expansion.
    """
    m = _canonical_modes(expansion, modes)
    if not 0 <= k < expansion.n:
        raise ValueError(f"state index {k} out of range")
    mu = z_initial(expansion, k, alpha).mu
    Phi = expansion.basis.Phi
    if len(m) == 1:
        i = m[0]
        return complex(Phi[k, i] * mu[i])
    factor = 1.0 + 0.0j
    for l in m:
        factor *= mu[l]
    total = 0.0 + 0.0j
    table = expansion.H.get(len(m), {})
    for i in range(expansion.n):
        h = table.get((i, m))
        if h is not None:
            total += Phi[k, i] * h * factor
    return complex(total)


def _theta_weights(expansion: NormalFormExpansion, theta: np.ndarray) -> np.ndarray:
    cos_delta = expansion.basis.cos_delta
    if np.any(np.abs(cos_delta) < DEGENERATE_COS_TOL):
        bad = int(np.argmin(np.abs(cos_delta)))
        raise DegenerateModeError(f"mode {bad} has |cos_delta| below {DEGENERATE_COS_TOL:g}")
    return theta / cos_delta


def _mu_theta(expansion: NormalFormExpansion, weights: np.ndarray, k: int, alpha: complex) -> np.ndarray:
    # theta-parameterized z-space perturbation image, built from references only
    psi_hat = expansion.basis.psi_hat
    bracket = alpha * psi_hat[:, k].astype(complex)
    for d, table in expansion.H.items():
        for (i, m), h in table.items():
            term = (alpha ** d) * h
            for l in m:
                term *= weights[l] * psi_hat[l, k]
            bracket[i] -= term
    return weights * bracket


def nonlinear_pf_theta(
    expansion: NormalFormExpansion, theta, k: int, modes, alpha: complex = 1.0
) -> complex:
    """Nonlinear participation factor evaluated directly from a theta vector.

    Requires an expansion built from the unit-norm references
    (``expansion.hat_flag``).  For every factorization ``(sigma, xi)`` with
    ``xi * sigma * cos_delta = theta`` this equals :func:`nonlinear_pf` on
    the correspondingly scaled expansion.
    """
    if not expansion.hat_flag:
        raise ValueError("theta evaluation requires an expansion built from unit-norm references")
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (expansion.n,):
        raise ValueError("theta must be a length-n vector")
    m = _canonical_modes(expansion, modes)
    if not 0 <= k < expansion.n:
        raise ValueError(f"state index {k} out of range")
    weights = _theta_weights(expansion, theta)
    mu = _mu_theta(expansion, weights, k, alpha)
    phi_hat = expansion.basis.phi_hat
    if len(m) == 1:
        i = m[0]
        return complex(phi_hat[k, i] * mu[i])
    factor = 1.0 + 0.0j
    for l in m:
        factor *= mu[l]
    total = 0.0 + 0.0j
    table = expansion.H.get(len(m), {})
    for i in range(expansion.n):
        h = table.get((i, m))
        if h is not None:
            total += weights[i] * phi_hat[k, i] * h * factor
    return complex(total)


def theta_residual(
    expansion: NormalFormExpansion, theta, target: complex, k: int, modes, alpha: complex = 1.0
) -> complex:
    """Residual ``target - nonlinear_pf_theta(theta, ...)``.

    Zero exactly when the theta vector reproduces the observed participation
    factor; useful as the component function of a root-finding problem over
    theta vectors (root enumeration itself is out of scope here).
    """
    return complex(target - nonlinear_pf_theta(expansion, theta, k, modes, alpha))


@dataclass(frozen=True)
class PFReport:
    """Participation factors for a batch of requests, with provenance metadata.

    ``linear`` is the full n-by-n linear matrix (or None when not requested);
    ``nonlinear`` maps ``(state k, mode tuple)`` to the complex value;
    ``alpha`` records the per-state perturbation amplitudes used;
    ``skipped_resonant`` lists the ``((target i, tuple), C)`` contributions
    that were excluded from h-coefficients as resonant.
    """

    theta: np.ndarray
    alpha: np.ndarray
    linear: np.ndarray | None = None
    nonlinear: dict[tuple[int, tuple[int, ...]], complex] = field(default_factory=dict)
    skipped_resonant: tuple = ()
    scheme: str | None = None
    normalized: bool = False


def build_report(
    expansion: NormalFormExpansion,
    *,
    linear: bool = False,
    modes: tuple = (),
    alpha=1.0,
    normalize: bool = False,
    scheme: str | None = None,
) -> PFReport:
    """Assemble a :class:`PFReport` for a batch of linear-mode / combination requests.

    ``modes`` is a sequence of selectors (mode index or tuple); for each the
    factor is computed for every state ``k`` using that state's amplitude
    ``alpha[k]``.  With ``normalize`` each per-selector column is divided by
    its largest-magnitude entry.
    """
    basis = expansion.basis
    n = expansion.n
    alpha_vec = np.broadcast_to(np.asarray(alpha, dtype=complex), (n,)).copy()
    lin = linear_pf(basis.Phi, basis.Psi) if linear else None
    values: dict[tuple[int, tuple[int, ...]], complex] = {}
    for selector in modes:
        m = _canonical_modes(expansion, selector)
        column = np.array(
            [nonlinear_pf(expansion, k, m, alpha_vec[k]) for k in range(n)], dtype=complex
        )
        if normalize:
            column = normalize_pf(column)
        for k in range(n):
            values[(k, m)] = complex(column[k])
    return PFReport(
        theta=basis.theta.copy(),
        alpha=alpha_vec,
        linear=lin,
        nonlinear=values,
        skipped_resonant=expansion.resonant_records(),
        scheme=scheme,
        normalized=normalize,
    )

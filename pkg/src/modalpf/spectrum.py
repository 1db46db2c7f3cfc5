"""Eigendecomposition with canonical references, scaling schemes and resonance detection.

Right eigenvectors (mode shapes) and left eigenvectors (mode compositions)
are only defined up to a nonzero complex scale.  This module fixes canonical
*references*: unit-norm vectors with a deterministic phase, so that any other
eigenvector pair is ``Phi_i = sigma_i * phi_hat_i`` and
``Psi_i = xi_i * psi_hat_i`` for unique complex scaling factors.  The product

    theta_i = Psi_i @ Phi_i = xi_i * sigma_i * cos_delta_i

with ``cos_delta_i = psi_hat_i @ phi_hat_i`` (plain row-column product, no
conjugation) is what participation-factor values actually depend on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .model import PolynomialSystem

__all__ = [
    "DegenerateModeError",
    "ModalBasis",
    "NotAnEigenvectorError",
    "ResonanceSet",
    "StrongResonanceError",
    "apply_scaling",
    "apply_scheme",
    "default_resonance_tolerance",
    "detect_resonances",
    "eigendecompose",
    "extract_scaling",
    "scaling_for_theta",
]

#: modes with |cos_delta| below this cannot be rescaled to theta = 1
DEGENERATE_COS_TOL = 1e-12

#: left/right eigenvectors are aligned with a reference up to this relative residual
EIGENVECTOR_RTOL = 1e-8


class StrongResonanceError(ValueError):
    """The matrix has a (numerically) repeated eigenvalue."""


class DegenerateModeError(ValueError):
    """A mode shape is numerically orthogonal to its own composition."""


class NotAnEigenvectorError(ValueError):
    """A supplied vector is not proportional to the reference eigenvector."""


@dataclass(frozen=True)
class ModalBasis:
    """Eigenstructure of a system matrix with explicit per-mode scaling factors.

    ``phi_hat`` holds unit-norm right eigenvectors as columns, ``psi_hat``
    unit-norm left eigenvectors as rows (norm order ``norm_ord``, default the
    1-norm).  The working eigenvectors are ``Phi = phi_hat * sigma`` and
    ``Psi = xi[:, None] * psi_hat``; ``theta = xi * sigma * cos_delta``.
    """

    eigenvalues: np.ndarray
    phi_hat: np.ndarray
    psi_hat: np.ndarray
    sigma: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    cos_delta: np.ndarray
    norm_ord: float = 1

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def Phi(self) -> np.ndarray:
        """Scaled right eigenvectors (columns)."""
        return self.phi_hat * self.sigma[None, :]

    @property
    def Psi(self) -> np.ndarray:
        """Scaled left eigenvectors (rows)."""
        return self.psi_hat * self.xi[:, None]

    def conjugate_partner(self, i: int) -> int:
        """Index of the conjugate mode of ``i`` (``i`` itself for a real eigenvalue)."""
        lam = self.eigenvalues[i]
        if abs(lam.imag) <= 1e-9 * max(1.0, abs(lam)):
            return i
        diffs = np.abs(self.eigenvalues - np.conj(lam))
        j = int(np.argmin(diffs))
        return j


@dataclass(frozen=True)
class ResonanceSet:
    """Mode tuples whose eigenvalue sum matches a target eigenvalue within ``tolerance``.

    ``tuples`` holds ``(source_modes, target)`` pairs with ``source_modes`` a
    non-decreasing tuple of 0-based mode indices of length ``order``.
    """

    order: int
    tolerance: float
    tuples: tuple[tuple[tuple[int, ...], int], ...]

    def __contains__(self, item) -> bool:
        return item in self.tuples


def _mode_order(w: np.ndarray, imag_tol: float) -> list[int]:
    # conjugate pairs adjacent (positive-imag first), groups sorted by
    # descending imaginary part of the representative, then descending real
    used: set[int] = set()
    groups: list[tuple[float, float, list[int]]] = []
    for i in range(len(w)):
        if i in used:
            continue
        if abs(w[i].imag) > imag_tol:
            candidates = [j for j in range(len(w)) if j != i and j not in used]
            j = min(candidates, key=lambda j: abs(w[j] - np.conj(w[i])))
            used.update((i, j))
            rep, mate = (i, j) if w[i].imag > 0 else (j, i)
            groups.append((w[rep].imag, w[rep].real, [rep, mate]))
        else:
            used.add(i)
            groups.append((0.0, w[i].real, [i]))
    groups.sort(key=lambda g: (-g[0], -g[1]))
    return [i for g in groups for i in g[2]]


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # rotate so the largest-magnitude component is real and positive
    j = int(np.argmax(np.abs(v)))
    pivot = v[j]
    if pivot == 0:
        return v
    return v * (np.conj(pivot) / abs(pivot))


def canonical_basis(A: np.ndarray, norm_ord: float = 1) -> ModalBasis:
    """Canonical unit-norm, phase-fixed basis of an arbitrary square matrix.

    Eigenvalues are sorted with conjugate pairs adjacent (positive imaginary
    part first), pairs ordered by descending imaginary part then descending
    real part.  Each reference eigenvector is normalized to unit ``norm_ord``
    norm and rotated so its largest-magnitude component is real positive;
    conjugate modes carry exactly conjugate references.  Scaling factors are
    initialized to ``sigma = xi = 1`` so ``theta = cos_delta``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    scale = np.linalg.norm(A, 2) or 1.0
    w, vl, vr = scipy.linalg.eig(A, left=True, right=True)

    for i, j in itertools.combinations(range(n), 2):
        if abs(w[i] - w[j]) < 1e-8 * scale:
            raise StrongResonanceError(
                f"eigenvalues {w[i]:.6g} and {w[j]:.6g} coincide within 1e-8*||A||"
            )

    imag_tol = 1e-9 * max(1.0, float(np.max(np.abs(w))))
    order = _mode_order(w, imag_tol)
    w = w[order]
    phi = vr[:, order].astype(complex)
    psi = vl[:, order].conj().T.astype(complex)  # rows satisfy psi_i A = lambda_i psi_i

    for i in range(n):
        phi[:, i] = _fix_phase(phi[:, i] / np.linalg.norm(phi[:, i], norm_ord))
        psi[i, :] = _fix_phase(psi[i, :] / np.linalg.norm(psi[i, :], norm_ord))
        if abs(w[i].imag) <= imag_tol:
            w[i] = w[i].real
            phi[:, i] = phi[:, i].real
            psi[i, :] = psi[i, :].real
    # enforce exactly conjugate references on conjugate pairs
    for i in range(n):
        if w[i].imag > imag_tol:
            diffs = np.abs(w - np.conj(w[i]))
            j = int(np.argmin(diffs))
            phi[:, j] = np.conj(phi[:, i])
            psi[j, :] = np.conj(psi[i, :])
            w[j] = np.conj(w[i])

    resid = max(
        np.linalg.norm(A @ phi - phi * w[None, :]),
        np.linalg.norm(psi @ A - w[:, None] * psi),
    )
    if resid > 1e-9 * scale * n:
        raise scipy.linalg.LinAlgError(f"eigendecomposition residual {resid:.3g} too large")

    cos_delta = np.einsum("ij,ji->i", psi, phi)
    ones = np.ones(n, dtype=complex)
    return ModalBasis(
        eigenvalues=w,
        phi_hat=phi,
        psi_hat=psi,
        sigma=ones.copy(),
        xi=ones.copy(),
        theta=cos_delta.copy(),
        cos_delta=cos_delta,
        norm_ord=norm_ord,
    )


def eigendecompose(sys: PolynomialSystem, norm_ord: float = 1) -> ModalBasis:
    """Eigendecompose the linear part of a system into a canonical :class:`ModalBasis`.

    Raises
    ------
    StrongResonanceError
        If two eigenvalues coincide within ``1e-8 * ||A||`` (distinct
        eigenvalues are a standing assumption of the whole analysis).
    """
    return canonical_basis(sys.A, norm_ord=norm_ord)


def apply_scaling(basis: ModalBasis, sigma, xi) -> ModalBasis:
    """Return a basis with explicit scaling factors applied to the references."""
    sigma = np.asarray(sigma, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    if sigma.shape != (basis.n,) or xi.shape != (basis.n,):
        raise ValueError("sigma and xi must be length-n vectors")
    if np.any(sigma == 0) or np.any(xi == 0):
        raise ValueError("scaling factors must be nonzero")
    return replace(basis, sigma=sigma, xi=xi, theta=sigma * xi * basis.cos_delta)


def apply_scheme(basis: ModalBasis, scheme: str) -> ModalBasis:
    """Apply one of the three standard normalization schemes.

    * ``"I"``: ``sigma = xi = 1`` (both eigenvectors unit norm, ``theta = cos_delta``);
    * ``"II"``: ``sigma = 1`` and ``xi = 1/cos_delta`` so each ``Psi_i @ Phi_i = 1``;
    * ``"III"``: ``xi = 1`` and ``sigma = 1/cos_delta`` (the mirror of II).
    """
    ones = np.ones(basis.n, dtype=complex)
    if scheme == "I":
        return apply_scaling(basis, ones, ones)
    if scheme in ("II", "III"):
        if np.any(np.abs(basis.cos_delta) < DEGENERATE_COS_TOL):
            bad = int(np.argmin(np.abs(basis.cos_delta)))
            raise DegenerateModeError(
                f"mode {bad} has |cos_delta| = {abs(basis.cos_delta[bad]):.3g}; "
                "cannot rescale to theta = 1"
            )
        if scheme == "II":
            return apply_scaling(basis, ones, 1.0 / basis.cos_delta)
        return apply_scaling(basis, 1.0 / basis.cos_delta, ones)
    raise ValueError(f"unknown scheme {scheme!r} (expected 'I', 'II' or 'III')")


def scaling_for_theta(basis: ModalBasis, theta) -> ModalBasis:
    """Apply the canonical factorization ``sigma = 1``, ``xi = theta / cos_delta``.

    Any factorization with the same theta vector yields identical
    participation factors, so this one stands in for them all.
    """
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (basis.n,):
        raise ValueError("theta must be a length-n vector")
    if np.any(np.abs(basis.cos_delta) < DEGENERATE_COS_TOL):
        bad = int(np.argmin(np.abs(basis.cos_delta)))
        raise DegenerateModeError(f"mode {bad} has |cos_delta| below {DEGENERATE_COS_TOL:g}")
    return apply_scaling(basis, np.ones(basis.n, dtype=complex), theta / basis.cos_delta)


def extract_scaling(basis: ModalBasis, Phi: np.ndarray, Psi: np.ndarray):
    """Recover the unique ``(sigma, xi, theta)`` relating ``(Phi, Psi)`` to the references.

    ``Phi`` columns and ``Psi`` rows must be right/left eigenvectors of the
    same matrix in the same mode order as ``basis``.  Returns the per-mode
    scale of each column/row and ``theta_i = Psi_i @ Phi_i``, verified against
    ``xi_i * sigma_i * cos_delta_i`` to 1e-10 relative.

    Raises
    ------
    NotAnEigenvectorError
        If a supplied column/row is not proportional to its reference.
    """
    Phi = np.asarray(Phi, dtype=complex)
    Psi = np.asarray(Psi, dtype=complex)
    n = basis.n
    if Phi.shape != (n, n) or Psi.shape != (n, n):
        raise ValueError("Phi and Psi must be n-by-n matrices")

    def project(ref: np.ndarray, vec: np.ndarray, what: str) -> complex:
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise NotAnEigenvectorError(f"{what} is the zero vector")
        scale = np.vdot(ref, vec) / np.vdot(ref, ref)
        resid = np.linalg.norm(vec - scale * ref)
        if resid > EIGENVECTOR_RTOL * norm:
            raise NotAnEigenvectorError(
                f"{what} deviates from the reference direction "
                f"(relative residual {resid / norm:.3g})"
            )
        return complex(scale)

    sigma = np.array([project(basis.phi_hat[:, i], Phi[:, i], f"column {i}") for i in range(n)])
    xi = np.array([project(basis.psi_hat[i, :], Psi[i, :], f"row {i}") for i in range(n)])
    theta = np.einsum("ij,ji->i", Psi, Phi)
    predicted = xi * sigma * basis.cos_delta
    denom = np.maximum(np.abs(theta), np.finfo(float).tiny)
    err = np.max(np.abs(theta - predicted) / denom)
    if err > 1e-10:
        raise NotAnEigenvectorError(
            f"theta identity violated (relative error {err:.3g}); "
            "inputs are not a consistent eigenvector family"
        )
    return sigma, xi, theta


def default_resonance_tolerance(eigenvalues: np.ndarray) -> float:
    """Default tolerance for resonance detection: ``1e-6 * max|lambda|``."""
    return 1e-6 * float(np.max(np.abs(eigenvalues)))


def detect_resonances(eigenvalues, order: int, tol: float | None = None) -> ResonanceSet:
    """Exhaustively scan mode tuples whose eigenvalue sum hits a target eigenvalue.

    A non-decreasing tuple ``(r, ..., v)`` of ``order`` source modes is
    resonant with target mode ``i`` when
    ``|lambda_r + ... + lambda_v - lambda_i| <= tol``.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    if order < 2:
        raise ValueError(f"resonance order must be >= 2, got {order}")
    if tol is None:
        tol = default_resonance_tolerance(lam)
    if tol <= 0 and np.max(np.abs(lam)) > 0:
        raise ValueError("tolerance must be positive")
    found = []
    for m in itertools.combinations_with_replacement(range(len(lam)), order):
        total = lam[list(m)].sum()
        for i in range(len(lam)):
            if abs(total - lam[i]) <= tol:
                found.append((m, i))
    return ResonanceSet(order=order, tolerance=float(tol), tuples=tuple(found))

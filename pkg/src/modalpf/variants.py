"""Monte Carlo participation-factor variants and a snapshot-based estimator.

Five estimators generalize participation factors to random initial
conditions: mode-in-state and state-in-mode expectations, a second-order
(normal-form corrected) mode-in-state variant, an energy-weighted
state-in-mode variant, and a data-driven variant that extracts its
eigenstructure from one-step snapshot pairs instead of the model matrix.

Ratio integrands are heavy-tailed near vanishing denominators, so samples
whose denominator magnitude falls below ``guard * ||x0||`` are rejected and
counted.  All draws come from a counter-based generator keyed by the seed,
so estimates are bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .normalform import NormalFormExpansion, z_from_state
from .spectrum import ModalBasis, canonical_basis

__all__ = [
    "InitialDistribution",
    "KoopmanBasis",
    "ModeMatchingError",
    "RankDeficientSnapshotsError",
    "VariantEstimate",
    "datadriven_pf",
    "fit_koopman",
    "match_modes",
    "modified_psimpf",
    "nonlinear_pmispf",
    "pmispf",
    "psimpf",
]

#: a mode counts as real when |Im lambda| is at or below this
REAL_MODE_TOL = 1e-9


class RankDeficientSnapshotsError(ValueError):
    """Snapshot matrix does not span the state space; operator fit is underdetermined."""


class ModeMatchingError(ValueError):
    """No one-to-one pairing of estimated and model eigenvalues within tolerance."""


@dataclass(frozen=True)
class InitialDistribution:
    """Symmetric distribution of initial conditions for the expectation estimators.

    ``kind`` is ``"uniform-sphere"`` (uniform on the radius-``radius``
    sphere) or ``"componentwise-uniform"`` (each component uniform on
    ``[-radius, radius]``).  ``guard`` is the minimum admitted denominator
    magnitude, as a fraction of the sample norm.
    """

    kind: str = "uniform-sphere"
    guard: float = 0.1
    seed: int = 0
    samples: int = 10_000
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform-sphere", "componentwise-uniform"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.guard <= 0:
            raise ValueError("guard must be positive")
        if self.samples < 1:
            raise ValueError("need at least one sample")

    def draw(self, n: int) -> np.ndarray:
        """Deterministic (samples, n) array of initial conditions."""
        rng = np.random.Generator(np.random.Philox(key=self.seed))
        if self.kind == "uniform-sphere":
            g = rng.standard_normal((self.samples, n))
            return self.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
        return rng.uniform(-self.radius, self.radius, size=(self.samples, n))


@dataclass(frozen=True)
class VariantEstimate:
    """Monte Carlo estimate with its standard error and sample accounting."""

    value: complex
    stderr: float
    admitted: int
    rejected: int
    seed: int

    def agrees_with(self, other_value: complex, n_sigma: float = 3.0, atol: float = 0.0) -> bool:
        return abs(self.value - other_value) <= n_sigma * self.stderr + atol


def _mean_stderr(values: np.ndarray) -> tuple[complex, float]:
    m = len(values)
    mean = complex(np.mean(values))
    if m < 2:
        return mean, 0.0
    var = np.var(values.real, ddof=1) + np.var(values.imag, ddof=1)
    return mean, float(np.sqrt(var / m))


def _estimate(values: np.ndarray, rejected: int, seed: int) -> VariantEstimate:
    if len(values) == 0:
        raise ValueError("no admitted samples; lower the guard or change the distribution")
    mean, se = _mean_stderr(values)
    return VariantEstimate(value=mean, stderr=se, admitted=len(values), rejected=rejected, seed=seed)


def pmispf(basis: ModalBasis, dist: InitialDistribution, i: int, k: int) -> VariantEstimate:
    """Mode-in-state expectation ``E{(Psi_i x0) * Phi[k, i] / x0[k]}``.

    For a symmetric distribution the cross terms cancel in expectation and
    the estimate converges to the linear participation factor; the value
    scales linearly with ``theta_i`` and is invariant under any
    ``(sigma_i, xi_i)`` refactorization that keeps ``theta_i`` fixed.
    """
    x0 = dist.draw(basis.n)
    denom = x0[:, k]
    admit = np.abs(denom) >= dist.guard * np.linalg.norm(x0, axis=1)
    proj = x0[admit] @ basis.Psi[i, :]
    values = proj * basis.Phi[k, i] / denom[admit]
    return _estimate(values, int(np.sum(~admit)), dist.seed)


def _z_columns(basis: ModalBasis, x0: np.ndarray, expansion: NormalFormExpansion | None) -> np.ndarray:
    # z-space initial conditions for each sample row; (samples, n)
    y0 = x0 @ basis.Psi.T
    if expansion is None:
        return y0
    z = y0.copy()
    for table in expansion.H.values():
        for (j, m), h in table.items():
            term = np.full(len(x0), h, dtype=complex)
            for l in m:
                term = term * y0[:, l]
            z[:, j] -= term
    return z


def psimpf(
    basis: ModalBasis,
    dist: InitialDistribution,
    i: int,
    k: int,
    expansion: NormalFormExpansion | None = None,
) -> VariantEstimate:
    """State-in-mode expectation ``E{psi[i, k] x0[k] / z_i0}``.

    For a real mode the ratio is taken directly; for a complex mode the
    conjugate-pair (real-part) ratio is used.  ``z_i0`` defaults to the
    linear projection ``Psi x0``; pass ``expansion`` to use the corrected
    z-space initial condition instead.  The row scale ``xi_i`` cancels
    between numerator and denominator, so the value is evaluated in the
    scale-reduced form (references over ``z_i0 / xi_i``), which keeps the
    cancellation exact in floating point.
    """
    if expansion is not None and expansion.basis is not basis:
        raise ValueError("expansion was built from a different basis")
    x0 = dist.draw(basis.n)
    z = _z_columns(basis, x0, expansion)
    J = z[:, i] / basis.xi[i]
    norms = np.linalg.norm(x0, axis=1)
    psi_hat_ik = basis.psi_hat[i, k]
    if abs(basis.eigenvalues[i].imag) <= REAL_MODE_TOL:
        denom = J
        numer = psi_hat_ik * x0[:, k]
    else:
        denom = J.real
        numer = psi_hat_ik.real * x0[:, k]
    admit = np.abs(denom) >= dist.guard * norms
    values = np.asarray(numer, dtype=complex)[admit] / denom[admit]
    return _estimate(values, int(np.sum(~admit)), dist.seed)


def nonlinear_pmispf(
    expansion: NormalFormExpansion, dist: InitialDistribution, i: int, k: int
) -> VariantEstimate:
    """Mode-in-state expectation with the normal-form corrected z-space projection.

    Evaluates ``E{z_i0 * Phi[k, i] / x0[k]}`` where ``z_i0`` is the series
    inversion of ``Psi x0`` (same truncation rule as the single-state
    perturbation).  Invariant under refactorizations that keep the full
    theta vector fixed.
    """
    basis = expansion.basis
    x0 = dist.draw(basis.n)
    z = _z_columns(basis, x0, expansion)
    denom = x0[:, k]
    admit = np.abs(denom) >= dist.guard * np.linalg.norm(x0, axis=1)
    values = z[admit, i] * basis.Phi[k, i] / denom[admit]
    return _estimate(values, int(np.sum(~admit)), dist.seed)


def modified_psimpf(basis: ModalBasis, dist: InitialDistribution, i: int, k: int) -> VariantEstimate:
    """Energy-weighted state-in-mode ratio of expectations.

    ``E{(psi[i,k] x0[k])* z_i0 + z_i0* (psi[i,k] x0[k])} / (2 E{z_i0 z_i0*})``
    computed over the same samples.  ``|xi_i|^2`` cancels between numerator
    and denominator, so the ratio is evaluated from the scale-reduced
    quantities; the result is real.
    """
    x0 = dist.draw(basis.n)
    J = (x0 @ basis.psi_hat[i, :])  # z_i0 / xi_i
    w = basis.psi_hat[i, k] * x0[:, k]
    numer = 2.0 * (np.conj(w) * J).real
    denom = 2.0 * (J * np.conj(J)).real
    d_mean = float(np.mean(denom))
    if abs(d_mean) < 1e-14:
        raise ValueError("mode-energy denominator is numerically zero")
    ratio = float(np.mean(numer)) / d_mean
    # delta-method standard error for a ratio of means over paired samples
    g = (numer - ratio * denom) / d_mean
    m = len(g)
    se = float(np.sqrt(np.var(g, ddof=1) / m)) if m > 1 else 0.0
    return VariantEstimate(value=ratio, stderr=se, admitted=m, rejected=0, seed=dist.seed)


@dataclass(frozen=True)
class KoopmanBasis:
    """Eigenstructure of a one-step operator estimated from snapshot pairs.

    ``basis`` holds the canonical eigenvectors of the discrete operator
    (left rows play the composition role, right columns the shape role);
    ``eigenvalues_ct`` are the continuous-time equivalents
    ``log(discrete) / dt`` used for reporting and mode matching.
    """

    operator: np.ndarray
    basis: ModalBasis
    eigenvalues_ct: np.ndarray
    dt: float
    pairs: int
    holdout_error: float


def fit_koopman(
    snapshots,
    norm_ord: float = 1,
    holdout_fraction: float = 0.1,
    holdout_rtol: float | None = None,
) -> KoopmanBasis:
    """Least-squares one-step operator from snapshot pairs, eigendecomposed canonically.

    The identity observable dictionary is used: observables are the states
    themselves.  A tail fraction of the pairs is held out to measure how
    well the fitted operator reproduces unseen snapshots; if
    ``holdout_rtol`` is given, a larger relative error raises ``ValueError``.

    Raises
    ------
    RankDeficientSnapshotsError
        If the training snapshots do not span the state space.
    """
    X, Y, dt = snapshots.X, snapshots.Y, snapshots.dt
    n, total = X.shape
    n_hold = int(total * holdout_fraction)
    n_fit = total - n_hold
    if n_fit < n:
        raise RankDeficientSnapshotsError("not enough snapshot pairs for a full-rank fit")
    Xf, Yf = X[:, :n_fit], Y[:, :n_fit]
    if np.linalg.matrix_rank(Xf) < n:
        raise RankDeficientSnapshotsError("snapshot matrix is rank deficient")
    K = np.linalg.lstsq(Xf.T, Yf.T, rcond=None)[0].T
    if n_hold:
        Xh, Yh = X[:, n_fit:], Y[:, n_fit:]
        err = float(np.linalg.norm(K @ Xh - Yh) / max(np.linalg.norm(Yh), np.finfo(float).tiny))
    else:
        err = 0.0
    if holdout_rtol is not None and err > holdout_rtol:
        raise ValueError(f"held-out snapshot error {err:.3g} exceeds {holdout_rtol:.3g}")
    basis = canonical_basis(K, norm_ord=norm_ord)
    lam_ct = np.log(basis.eigenvalues.astype(complex)) / dt
    return KoopmanBasis(
        operator=K,
        basis=basis,
        eigenvalues_ct=lam_ct,
        dt=dt,
        pairs=total,
        holdout_error=err,
    )


def match_modes(kbasis: KoopmanBasis, model_eigenvalues, tol: float) -> list[int]:
    """Pair estimated continuous eigenvalues with model eigenvalues one-to-one.

    Returns ``pairing`` with ``pairing[model_index] = estimated_index``.
    Raises :class:`ModeMatchingError` when any eigenvalue has no unique
    partner within ``tol``.
    """
    model = np.asarray(model_eigenvalues, dtype=complex)
    est = kbasis.eigenvalues_ct
    pairing: list[int] = []
    taken: set[int] = set()
    for lam in model:
        diffs = np.abs(est - lam)
        j = int(np.argmin(diffs))
        if diffs[j] > tol or j in taken:
            raise ModeMatchingError(
                f"no unique estimated eigenvalue within {tol:g} of {lam:.6g}"
            )
        taken.add(j)
        pairing.append(j)
    return pairing


def datadriven_pf(kbasis: KoopmanBasis, dist: InitialDistribution, i: int, k: int) -> VariantEstimate:
    """Mode-in-state expectation evaluated on the snapshot-estimated eigenstructure.

    With identity observables this is the same expectation as
    :func:`pmispf` with the estimated left/right eigenvectors in place of
    the model ones, and shares its invariance: only the product of the
    mode's two scales matters.
    """
    return pmispf(kbasis.basis, dist, i, k)

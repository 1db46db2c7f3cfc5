"""Near-identity coordinate change that linearizes a polynomial system order by order.

With ``x = Phi y`` the system becomes ``y' = Lambda y + higher-order terms``;
a further polynomial substitution ``y = z + sum h z-products`` removes those
terms order by order, leaving plain exponentials ``z_i(t) = z_i0 exp(lambda_i t)``.
This module builds the required coefficient tables, inverts initial
conditions into z-space, and reconstructs closed-form responses, including
the secular ``(1 + t) exp(lambda_i t)`` correction that replaces terms whose
frequency-matching denominator vanishes (resonances).

Summation convention: every interior sum runs over non-decreasing mode
tuples, with coefficients premultiplied by the number of distinct orderings.
A table value keyed by ``(i, (r, s, ...))`` is therefore the *total*
coefficient of the product ``z_r z_s ...`` in row ``i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import PolynomialSystem, ordering_multiplicity
from .sim import Trajectory
from .spectrum import ModalBasis, ResonanceSet, default_resonance_tolerance, detect_resonances

__all__ = [
    "NormalFormExpansion",
    "ResonantComponentError",
    "ZInitial",
    "build_expansion",
    "h_coefficients",
    "mode_component",
    "reconstruct",
    "y_coefficients",
    "z_from_state",
    "z_initial",
]

Key = tuple[int, tuple[int, ...]]  # (target row i, canonical source-mode tuple)
Table = dict[Key, complex]


class ResonantComponentError(ValueError):
    """The requested component was excluded as resonant; carries the raw coefficients."""

    def __init__(self, message: str, records: tuple[tuple[Key, complex], ...]):
        super().__init__(message)
        self.records = records


@dataclass(frozen=True)
class NormalFormExpansion:
    """Coefficient tables of the normal-form transformation up to ``order``.

    ``C[d]`` maps ``(i, tuple)`` to the total y-space coefficient of the
    order-``d`` product; ``H[d]`` holds ``C / (sum lambda_tuple - lambda_i)``
    for the non-resonant keys.  Resonant keys (denominator within
    ``tolerance`` of zero) are excluded from ``H`` and retained in
    ``resonant[d]`` with their C values.  ``hat_flag`` records whether the
    tables were built from the unit-norm reference eigenvectors.
    """

    basis: ModalBasis
    order: int
    C: dict[int, Table]
    H: dict[int, Table]
    resonant: dict[int, Table]
    resonances: dict[int, ResonanceSet]
    tolerance: float
    hat_flag: bool

    @property
    def n(self) -> int:
        return self.basis.n

    def resonant_records(self) -> tuple[tuple[Key, complex], ...]:
        """All excluded (key, C value) pairs across orders."""
        return tuple(
            (key, val) for d in sorted(self.resonant) for key, val in self.resonant[d].items()
        )


@dataclass(frozen=True)
class ZInitial:
    """z-space initial condition for a single-state perturbation ``x0 = alpha * e_k``."""

    k: int
    alpha: complex
    mu: np.ndarray
    order: int


def _ordered_products(phi: np.ndarray, source: tuple[int, ...], target: tuple[int, ...]) -> complex:
    # sum over distinct orderings pi of `source` of prod_j phi[pi_j, target_j]
    total = 0.0 + 0.0j
    for perm in set(itertools.permutations(source)):
        term = 1.0 + 0.0j
        for row, col in zip(perm, target):
            term *= phi[row, col]
        total += term
    return total


def y_coefficients(sys: PolynomialSystem, basis: ModalBasis, order: int) -> Table:
    """Total y-space coefficients of the given order after ``x = Phi y``.

    The value at ``(i, (r, ..., v))`` contracts the order-``d`` monomial table
    with row ``i`` of ``Psi`` and columns ``r..v`` of ``Phi``, expanded over
    all orderings consistent with the canonical monomial store and
    premultiplied by the ordering multiplicity of the target tuple.
    """
    if order > sys.max_order:
        raise ValueError(f"system has no order-{order} terms (max_order={sys.max_order})")
    table = sys.tensors.get(order, {})
    Phi, Psi = basis.Phi, basis.Psi
    n = basis.n
    out: Table = {}
    if not table:
        return out
    entries = [((k, m), coeff / ordering_multiplicity(m)) for (k, m), coeff in table.items()]
    for target in itertools.combinations_with_replacement(range(n), order):
        mult = ordering_multiplicity(target)
        contracted = np.zeros(n, dtype=complex)
        for (k, m), sym_coeff in entries:
            prod = _ordered_products(Phi, m, target)
            if prod != 0:
                contracted += Psi[:, k] * (sym_coeff * prod)
        contracted *= mult
        for i in range(n):
            out[(i, target)] = complex(contracted[i])
    return out


def h_coefficients(
    C_by_order: dict[int, Table], basis: ModalBasis, tol: float | None = None
) -> NormalFormExpansion:
    """Divide y-space coefficients by their frequency defects, excluding resonant keys.

    For each key the defect is ``sum(lambda[tuple]) - lambda[i]``; keys with
    ``|defect| <= tol`` get no h-coefficient (resonance is data, not an
    error) and are recorded with their C value instead.
    """
    lam = basis.eigenvalues
    if tol is None:
        tol = default_resonance_tolerance(lam)
    H: dict[int, Table] = {}
    resonant: dict[int, Table] = {}
    resonances: dict[int, ResonanceSet] = {}
    for d, table in sorted(C_by_order.items()):
        resonances[d] = detect_resonances(lam, d, tol)
        Hd: Table = {}
        Rd: Table = {}
        for (i, m), c in table.items():
            defect = lam[list(m)].sum() - lam[i]
            if abs(defect) <= tol:
                Rd[(i, m)] = c
            else:
                Hd[(i, m)] = c / defect
        H[d] = Hd
        resonant[d] = Rd
    order = max(C_by_order) if C_by_order else 1
    hat = bool(np.all(basis.sigma == 1.0) and np.all(basis.xi == 1.0))
    return NormalFormExpansion(
        basis=basis,
        order=order,
        C=dict(C_by_order),
        H=H,
        resonant=resonant,
        resonances=resonances,
        tolerance=float(tol),
        hat_flag=hat,
    )


def build_expansion(
    sys: PolynomialSystem,
    basis: ModalBasis,
    order: int | None = None,
    tol: float | None = None,
) -> NormalFormExpansion:
    """Build the full expansion for orders ``2..order`` (capped at ``sys.max_order``)."""
    if order is None:
        order = sys.max_order
    order = min(order, sys.max_order)
    C = {d: y_coefficients(sys, basis, d) for d in range(2, order + 1)}
    expansion = h_coefficients(C, basis, tol)
    if not C:  # linear system: keep the requested bookkeeping order
        expansion = NormalFormExpansion(
            basis=basis,
            order=max(order, 1),
            C={},
            H={},
            resonant={},
            resonances={},
            tolerance=float(tol if tol is not None else default_resonance_tolerance(basis.eigenvalues)),
            hat_flag=expansion.hat_flag,
        )
    return expansion


def _invert_series(expansion: NormalFormExpansion, y0: np.ndarray, refine: int = 0) -> np.ndarray:
    # one-pass truncation: z ~= y0 - sum h * y0-products; each refinement sweep
    # re-substitutes the current z estimate instead of y0
    z = np.array(y0, dtype=complex)
    for _ in range(refine + 1):
        correction = np.zeros_like(y0)
        for table in expansion.H.values():
            for (i, m), h in table.items():
                term = h
                for l in m:
                    term *= z[l]
                correction[i] += term
        z = y0 - correction
    return z


def z_from_state(expansion: NormalFormExpansion, x0: np.ndarray, refine: int = 0) -> np.ndarray:
    """z-space initial condition for an arbitrary initial state.

    Uses the single-pass series inversion ``z = Psi x0 - sum h (Psi x0)-products``
    (resonant keys have no h-coefficient and contribute nothing).  ``refine``
    adds fixed-point sweeps for diagnostic comparison; the default matches
    the customary one-pass approximation.
    """
    x0 = np.asarray(x0)
    y0 = expansion.basis.Psi @ x0.astype(complex)
    return _invert_series(expansion, y0, refine=refine)


def z_initial(
    expansion: NormalFormExpansion, k: int, alpha: complex, refine: int = 0
) -> ZInitial:
    """z-space initial condition when only state ``k`` is perturbed with amplitude ``alpha``."""
    n = expansion.n
    if not 0 <= k < n:
        raise ValueError(f"state index {k} out of range")
    x0 = np.zeros(n, dtype=complex)
    x0[k] = alpha
    mu = _invert_series(expansion, expansion.basis.Psi[:, k] * alpha, refine=refine)
    return ZInitial(k=k, alpha=complex(alpha), mu=mu, order=expansion.order)


def _check_tgrid(tgrid) -> np.ndarray:
    t = np.asarray(tgrid, dtype=float)
    if t.size == 0:
        raise ValueError("time grid is empty")
    if t.size > 1:
        dts = np.diff(t)
        if np.any(dts <= 0):
            raise ValueError("time grid must be strictly increasing")
        if np.max(np.abs(dts - dts[0])) > 1e-9 * max(abs(dts[0]), 1e-30):
            raise ValueError("time grid must be uniform")
    return t


def _as_real_trajectory(t: np.ndarray, x: np.ndarray, provenance: str) -> Trajectory:
    max_imag = float(np.max(np.abs(x.imag))) if x.size else 0.0
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    samples = np.ascontiguousarray(x.real.T)
    samples.flags.writeable = False
    return Trajectory(t0=float(t[0]), dt=dt, samples=samples, provenance=provenance, max_imag=max_imag)


def reconstruct(expansion: NormalFormExpansion, z0, tgrid) -> Trajectory:
    """Closed-form response on a uniform time grid.

    Sums the modal exponentials ``Phi z0 exp(lambda t)``, every non-resonant
    product term ``Phi_i h (z0-products) exp(sum lambda t)``, and for each
    excluded resonant key the secular term
    ``Phi_i C (z0-products) (1 + t) exp(lambda_i t)``.  The result is cast to
    a real trajectory; the discarded imaginary residue is reported via
    ``max_imag`` (small when ``z0`` is conjugate-consistent).
    """
    t = _check_tgrid(tgrid)
    z0 = np.asarray(z0, dtype=complex)
    basis = expansion.basis
    lam = basis.eigenvalues
    Phi = basis.Phi
    x = (Phi * z0[None, :]) @ np.exp(np.outer(lam, t))
    for d in sorted(expansion.H):
        for (i, m), h in expansion.H[d].items():
            amp = h
            rate = 0.0 + 0.0j
            for l in m:
                amp *= z0[l]
                rate += lam[l]
            if amp != 0:
                x += np.outer(Phi[:, i] * amp, np.exp(rate * t))
        for (i, m), c in expansion.resonant.get(d, {}).items():
            amp = c
            for l in m:
                amp *= z0[l]
            if amp != 0:
                x += np.outer(Phi[:, i] * amp, (1.0 + t) * np.exp(lam[i] * t))
    return _as_real_trajectory(t, x, "reconstructed")


def _conjugate_tuple(basis: ModalBasis, m: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(basis.conjugate_partner(l) for l in m))


def mode_component(expansion: NormalFormExpansion, z0, selector, tgrid) -> Trajectory:
    """Single exponential component of the closed-form response.

    ``selector`` is either a 0-based mode index (the linear component
    ``Phi_i z0_i exp(lambda_i t)``) or a tuple of mode indices (the
    combination component at rate ``sum lambda``).  The conjugate-partner
    component is always included so the result is real.

    Raises
    ------
    ResonantComponentError
        If the selected combination tuple was excluded as resonant for any
        target mode; the exception carries the recorded raw coefficients.
    """
    t = _check_tgrid(tgrid)
    z0 = np.asarray(z0, dtype=complex)
    basis = expansion.basis
    lam = basis.eigenvalues
    Phi = basis.Phi
    n = basis.n

    if np.isscalar(selector) or isinstance(selector, (int, np.integer)):
        i = int(selector)
        if not 0 <= i < n:
            raise ValueError(f"mode index {i} out of range")
        members = {i, basis.conjugate_partner(i)}
        x = np.zeros((n, t.size), dtype=complex)
        for j in members:
            x += np.outer(Phi[:, j] * z0[j], np.exp(lam[j] * t))
        return _as_real_trajectory(t, x, "mode-component")

    m = tuple(sorted(int(l) for l in selector))
    if any(not 0 <= l < n for l in m):
        raise ValueError(f"combination tuple {m} out of range")
    d = len(m)
    if d < 2:
        raise ValueError("combination tuples need at least two modes")
    tuples = {m, _conjugate_tuple(basis, m)}
    records = tuple(
        ((i, key_m), c)
        for (i, key_m), c in sorted(expansion.resonant.get(d, {}).items())
        if key_m in tuples
    )
    if records:
        raise ResonantComponentError(
            f"combination tuple {m} is resonant and was excluded from the transformation",
            records,
        )
    x = np.zeros((n, t.size), dtype=complex)
    for mm in tuples:
        rate = lam[list(mm)].sum()
        amp_vec = np.zeros(n, dtype=complex)
        for (i, key_m), h in expansion.H.get(d, {}).items():
            if key_m != mm:
                continue
            amp = h
            for l in mm:
                amp *= z0[l]
            amp_vec += Phi[:, i] * amp
        x += np.outer(amp_vec, np.exp(rate * t))
    return _as_real_trajectory(t, x, "mode-component")

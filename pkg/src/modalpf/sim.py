"""Ground-truth integration and snapshot-ensemble generation.

Fixed-step classical Runge-Kutta keeps every run bit-for-bit reproducible,
which matters more than efficiency for the desk-scale systems this package
targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PolynomialSystem, evaluate_rhs

__all__ = [
    "DivergenceError",
    "SnapshotSet",
    "Trajectory",
    "ensemble",
    "integrate",
    "perturb_state",
]

DIVERGENCE_LIMIT = 1e12


class DivergenceError(RuntimeError):
    """The integrated state left the trust region.

    ``last_index`` is the index of the last finite, in-range sample.
    """

    def __init__(self, message: str, last_index: int):
        super().__init__(message)
        self.last_index = last_index


@dataclass(frozen=True)
class Trajectory:
    """Real state samples on a uniform time grid.

    ``provenance`` records how the samples were produced: ``"integrated"``,
    ``"reconstructed"`` or ``"mode-component"``.  ``max_imag`` is the largest
    imaginary residue discarded when a closed-form (complex-arithmetic)
    reconstruction was cast to a real trajectory.
    """

    t0: float
    dt: float
    samples: np.ndarray
    provenance: str
    max_imag: float = 0.0

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    def to_csv(self) -> str:
        n = self.samples.shape[1]
        lines = ["t," + ",".join(f"x{j + 1}" for j in range(n))]
        for t, row in zip(self.t, self.samples):
            lines.append(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def perturb_state(n: int, k: int, alpha: float) -> np.ndarray:
    """Initial state perturbing only state ``k`` (0-based) with amplitude ``alpha``."""
    if not 0 <= k < n:
        raise ValueError(f"state index {k} out of range for dimension {n}")
    x0 = np.zeros(n)
    x0[k] = alpha
    return x0


def integrate(sys: PolynomialSystem, x0, dt: float = 1e-3, T: float = 10.0) -> Trajectory:
    """Integrate ``x' = f(x)`` with fixed-step classical 4th-order Runge-Kutta.

    Raises :class:`DivergenceError` as soon as the state norm exceeds
    ``DIVERGENCE_LIMIT``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("T must be at least one step")
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (sys.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({sys.n},)")
    steps = int(round(T / dt))
    out = np.empty((steps + 1, sys.n))
    out[0] = x
    for s in range(steps):
        k1 = evaluate_rhs(sys, x)
        k2 = evaluate_rhs(sys, x + 0.5 * dt * k1)
        k3 = evaluate_rhs(sys, x + 0.5 * dt * k2)
        k4 = evaluate_rhs(sys, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"state norm exceeded {DIVERGENCE_LIMIT:g} at step {s + 1}", last_index=s
            )
        out[s + 1] = x
    out.flags.writeable = False
    return Trajectory(t0=0.0, dt=dt, samples=out, provenance="integrated")


@dataclass(frozen=True)
class SnapshotSet:
    """One-step snapshot pairs ``(X[:, j], Y[:, j])`` with ``Y = X`` advanced by ``dt``."""

    X: np.ndarray
    Y: np.ndarray
    dt: float
    members: int
    diverged: int

    @property
    def pairs(self) -> int:
        return self.X.shape[1]


def ensemble(sys: PolynomialSystem, dist, dt: float, steps: int) -> SnapshotSet:
    """Integrate one short trajectory per sampled initial condition and pair snapshots.

    ``dist`` is an :class:`~modalpf.variants.InitialDistribution`; its sample
    count sets the number of ensemble members.  Members that diverge are
    skipped and counted.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    starts = dist.draw(sys.n)
    xs, ys = [], []
    diverged = 0
    for x0 in starts:
        try:
            traj = integrate(sys, x0, dt=dt, T=steps * dt)
        except DivergenceError:
            diverged += 1
            continue
        xs.append(traj.samples[:-1])
        ys.append(traj.samples[1:])
    if not xs:
        raise DivergenceError("every ensemble member diverged", last_index=-1)
    X = np.concatenate(xs, axis=0).T
    Y = np.concatenate(ys, axis=0).T
    return SnapshotSet(X=X, Y=Y, dt=dt, members=len(starts), diverged=diverged)

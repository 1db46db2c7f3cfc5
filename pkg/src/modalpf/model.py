"""Polynomial dynamical systems stored as Taylor coefficients about an equilibrium at the origin.

A system is ``x' = A x + sum of monomial terms``.  Monomial coefficients of
order ``d >= 2`` live in a sparse canonical table: the key is an equation
index ``k`` together with a non-decreasing tuple ``m`` of ``d`` state indices,
and the stored value is the *total* coefficient of the monomial
``x[m[0]] * x[m[1]] * ...`` in equation ``k``.  Inputs that spread a monomial
over several orderings are folded into the canonical key by summation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelFormatError",
    "PolynomialSystem",
    "evaluate_rhs",
    "ordering_multiplicity",
    "parse_model",
    "serialize_model",
]

TensorTable = dict[tuple[int, tuple[int, ...]], float]


class ModelFormatError(ValueError):
    """A model document violates the input schema."""


def ordering_multiplicity(index: tuple[int, ...]) -> int:
    """Number of distinct orderings of a monomial multi-index."""
    count = math.factorial(len(index))
    for rep in set(index):
        count //= math.factorial(sum(1 for e in index if e == rep))
    return count


@dataclass(frozen=True)
class PolynomialSystem:
    """Polynomial vector field with linear part ``A`` and canonical monomial tables.

    Attributes
    ----------
    n : int
        State dimension.
    A : ndarray, shape (n, n)
        Real Jacobian at the origin.
    tensors : dict
        Maps order ``d >= 2`` to a table ``{(k, m): coeff}`` with ``k`` a
        0-based equation index and ``m`` a non-decreasing tuple of ``d``
        0-based state indices holding the total monomial coefficient.
    """

    n: int
    A: np.ndarray
    tensors: dict[int, TensorTable] = field(default_factory=dict)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if self.n < 1:
            raise ModelFormatError(f"state count must be positive, got {self.n}")
        if A.shape != (self.n, self.n):
            raise ModelFormatError(f"A has shape {A.shape}, expected ({self.n}, {self.n})")
        if not np.all(np.isfinite(A)):
            raise ModelFormatError("A contains non-finite entries")
        A.flags.writeable = False
        object.__setattr__(self, "A", A)
        for order, table in self.tensors.items():
            if order < 2:
                raise ModelFormatError(f"tensor order must be >= 2, got {order}")
            for (k, m), coeff in table.items():
                if not 0 <= k < self.n:
                    raise ModelFormatError(f"equation index {k} out of range")
                if len(m) != order:
                    raise ModelFormatError(f"multi-index {m} does not have order {order}")
                if any(not 0 <= j < self.n for j in m):
                    raise ModelFormatError(f"multi-index {m} out of range")
                if tuple(sorted(m)) != tuple(m):
                    raise ModelFormatError(f"multi-index {m} is not canonical (non-decreasing)")
                if not math.isfinite(coeff):
                    raise ModelFormatError(f"non-finite coefficient at ({k}, {m})")

    @property
    def max_order(self) -> int:
        """Highest polynomial order present (1 for a purely linear system)."""
        orders = [d for d, table in self.tensors.items() if table]
        return max(orders) if orders else 1


def parse_model(text: str) -> PolynomialSystem:
    """Parse a JSON model document into a validated :class:`PolynomialSystem`.

    The document schema is::

        {"n": int, "A": [[real]], "tensors": [
            {"order": int, "entries": [{"k": int, "index": [int...], "coeff": real}]}]}

    Indices are 1-based in documents and converted to 0-based internally.
    Entries whose multi-index is a reordering of an existing one are folded
    into the canonical non-decreasing key by summation.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("top-level document must be an object")
    try:
        n = int(doc["n"])
        A = doc["A"]
    except KeyError as exc:
        raise ModelFormatError(f"missing required field {exc}") from exc

    tensors: dict[int, TensorTable] = {}
    for block in doc.get("tensors", []):
        try:
            order = int(block["order"])
            entries = block["entries"]
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"malformed tensor block: {exc}") from exc
        table = tensors.setdefault(order, {})
        for entry in entries:
            try:
                k = int(entry["k"]) - 1
                index = tuple(int(j) - 1 for j in entry["index"])
                coeff = float(entry["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ModelFormatError(f"malformed tensor entry {entry!r}: {exc}") from exc
            if any(not 0 <= j < n for j in index):
                raise ModelFormatError(f"state index out of range in entry {entry!r}")
            if not math.isfinite(coeff):
                raise ModelFormatError(f"non-finite coefficient in entry {entry!r}")
            key = (k, tuple(sorted(index)))
            table[key] = table.get(key, 0.0) + coeff

    try:
        A_arr = np.asarray(A, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"A is not a numeric matrix: {exc}") from exc
    if A_arr.ndim != 2 or A_arr.shape != (n, n):
        raise ModelFormatError(f"A has shape {A_arr.shape}, expected ({n}, {n})")
    return PolynomialSystem(n=n, A=A_arr, tensors=tensors)


def serialize_model(sys: PolynomialSystem) -> str:
    """Serialize a system back to the canonical JSON document (1-based indices)."""
    blocks = []
    for order in sorted(sys.tensors):
        entries = [
            {"k": k + 1, "index": [j + 1 for j in m], "coeff": coeff}
            for (k, m), coeff in sorted(sys.tensors[order].items())
        ]
        if entries:
            blocks.append({"order": order, "entries": entries})
    doc = {"n": sys.n, "A": sys.A.tolist(), "tensors": blocks}
    return json.dumps(doc, indent=2)


def evaluate_rhs(sys: PolynomialSystem, x: np.ndarray) -> np.ndarray:
    """Evaluate the vector field ``A x + monomial terms`` at state ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({sys.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("state contains non-finite entries")
    out = sys.A @ x
    for table in sys.tensors.values():
        for (k, m), coeff in table.items():
            term = coeff
            for j in m:
                term *= x[j]
            out[k] += term
    return out

"""Loading vectors: the fixed weights of the linear functional being estimated.

A loading vector is stored sorted by decreasing absolute value, which is the
order every threshold and rate computation assumes.  The sort permutation is
retained so observations and estimates given in the caller's coordinate order
can be mapped back and forth exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LoadingVector",
    "LoadingSpec",
    "make_loading",
    "effective_dimension",
    "drop_zero_loadings",
]

_KINDS = ("explicit", "homogeneous", "two_phase", "exp_decay")


@dataclass(frozen=True)
class LoadingVector:
    """Nonzero finite loadings sorted by decreasing absolute value.

    ``values[k] == original[order[k]]``, so ``order`` maps sorted positions to
    the caller's original coordinates.
    """

    values: np.ndarray
    order: np.ndarray
    provenance: str = "explicit"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        order = np.asarray(self.order, dtype=np.intp)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("loading must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("loading entries must be finite")
        if np.any(values == 0.0):
            raise ValueError("loading entries must be nonzero")
        a = np.abs(values)
        if np.any(a[:-1] < a[1:]):
            raise ValueError("loading must be sorted by decreasing |value|")
        if order.shape != values.shape or set(order.tolist()) != set(range(values.size)):
            raise ValueError("order must be a permutation of 0..d-1")
        values.flags.writeable = False
        order.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "order", order)

    @property
    def d(self) -> int:
        return int(self.values.size)

    @property
    def abs_values(self) -> np.ndarray:
        return np.abs(self.values)

    def to_sorted(self, x: np.ndarray) -> np.ndarray:
        """Reorder a vector from the original coordinate order to sorted order."""
        x = np.asarray(x)
        if x.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}, got shape {x.shape}")
        return x[self.order]

    def to_original(self, x_sorted: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_sorted`."""
        x_sorted = np.asarray(x_sorted)
        if x_sorted.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}, got shape {x_sorted.shape}")
        out = np.empty_like(x_sorted)
        out[self.order] = x_sorted
        return out

    @property
    def original_values(self) -> np.ndarray:
        return self.to_original(self.values)


@dataclass(frozen=True)
class LoadingSpec:
    """Declarative description of a loading vector.

    kind:
        ``explicit``     -- ``values`` given verbatim,
        ``homogeneous``  -- all ones, needs ``d``,
        ``two_phase``    -- ``floor(d**gamma_d)`` entries ``d**gamma_lambda`` then ones,
        ``exp_decay``    -- ``exp(-c * (j-1)**gamma)``, ``c >= 0`` and ``gamma >= 1``
                            keep the decay profile non-decreasing and convex.
    """

    kind: str
    d: int | None = None
    values: tuple[float, ...] | None = None
    gamma_d: float | None = None
    gamma_lambda: float | None = None
    c: float | None = None
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown loading kind {self.kind!r}")
        if self.kind == "explicit":
            if not self.values:
                raise ValueError("explicit loading needs values")
        else:
            if self.d is None or int(self.d) < 1:
                raise ValueError("generated loading needs d >= 1")
        if self.kind == "two_phase":
            if self.gamma_d is None or self.gamma_lambda is None:
                raise ValueError("two_phase needs gamma_d and gamma_lambda")
            if self.gamma_d <= 0 or self.gamma_lambda <= 0:
                raise ValueError("two_phase needs gamma_d > 0 and gamma_lambda > 0")
        if self.kind == "exp_decay":
            if self.c is None or self.gamma is None:
                raise ValueError("exp_decay needs c and gamma")
            if self.c < 0 or self.gamma < 1:
                raise ValueError("exp_decay needs c >= 0 and gamma >= 1")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for name in ("d", "values", "gamma_d", "gamma_lambda", "c", "gamma"):
            v = getattr(self, name)
            if v is not None:
                out[name] = list(v) if name == "values" else v
        return out


def drop_zero_loadings(values) -> tuple[np.ndarray, np.ndarray]:
    """Drop exactly-zero entries from a raw loading sequence.

    Returns ``(kept_values, kept_indices)`` so callers can see which
    coordinates were removed; dimension changes are never silent.
    """
    values = np.asarray(values, dtype=float)
    kept = np.nonzero(values != 0.0)[0]
    return values[kept], kept


def make_loading(spec: LoadingSpec) -> LoadingVector:
    """Build a validated, sorted loading vector from a spec."""
    if spec.kind == "explicit":
        raw = np.asarray(spec.values, dtype=float)
        order = np.argsort(-np.abs(raw), kind="stable")
        return LoadingVector(raw[order], order, provenance="explicit")

    d = int(spec.d)
    if spec.kind == "homogeneous":
        vals = np.ones(d)
    elif spec.kind == "two_phase":
        head = math.floor(d ** spec.gamma_d)
        if head > d:
            raise ValueError("two_phase head count floor(d**gamma_d) exceeds d")
        vals = np.ones(d)
        vals[:head] = d ** spec.gamma_lambda
    else:  # exp_decay with decay profile c * x**gamma
        j = np.arange(d, dtype=float)
        vals = np.exp(-spec.c * j**spec.gamma)
        if np.any(vals == 0.0):
            raise ValueError("exp_decay underflowed to zero loadings; reduce c or d")
    return LoadingVector(vals, np.arange(d, dtype=np.intp), provenance=spec.kind)


def effective_dimension(loading: LoadingVector) -> int:
    """Index of the first loading below 1/2 (1-based), or d+1 if none is."""
    below = np.nonzero(loading.abs_values < 0.5)[0]
    return int(below[0]) + 1 if below.size else loading.d + 1

"""
Objective functions.

Every objective is normalised so that its minimiser is the origin and
``f(0) = 0``.  ``value`` and ``gradient`` broadcast over leading axes: an
array of shape ``(..., dim)`` yields values of shape ``(...)`` and gradients
of shape ``(..., dim)``.  The geometry code relies on this to map whole
contours at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FD_STEP = 1e-5


@dataclass(frozen=True)
class Objective:
    """A smooth convex objective with gradient Lipschitz constant ``lipschitz``.

    ``kappa`` is the condition number; ``math.inf`` marks an objective that is
    only convex (not strongly convex).
    """

    dim: int
    lipschitz: float
    kappa: float
    value: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradient: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not self.lipschitz > 0:
            raise ValueError(f"lipschitz must be positive, got {self.lipschitz}")
        if not self.kappa >= 1:
            raise ValueError(f"kappa must be >= 1, got {self.kappa}")

    @property
    def strongly_convex(self) -> bool:
        return math.isfinite(self.kappa)


def make_quadratic(diag: Sequence[float]) -> Objective:
    """``f(x) = 0.5 * x^T diag(Q) x``; L and kappa are the exact eigenvalue extremes."""
    Q = np.asarray(diag, dtype=float)
    if Q.ndim != 1 or Q.size == 0:
        raise ValueError("diag must be a non-empty list of reals")
    if np.any(~(Q > 0)):
        raise ValueError("all diagonal entries must be positive")

    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(Q * x * x, axis=-1)

    def gradient(x):
        return Q * np.asarray(x, dtype=float)

    return Objective(
        dim=Q.size,
        lipschitz=float(Q.max()),
        kappa=float(Q.max() / Q.min()),
        value=value,
        gradient=gradient,
        name=f"quadratic{Q.tolist()}",
    )


def make_piecewise(kappa: float = 5.0) -> Objective:
    """One-dimensional piecewise-linear-gradient objective.

    The gradient has slope ``kappa`` for ``x < 1`` and ``x >= 2`` and slope 1
    in between, so L = kappa and the strong-convexity modulus is 1.  The value
    is the exact piecewise integral of the gradient, continuous at the kinks.
    """
    if not kappa >= 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    k = float(kappa)
    f1 = 0.5 * k
    f2 = f1 + (k - 1.0) + 1.5

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, k * x, np.where(x < 2.0, k - 1.0 + x, 1.0 - k + k * x))

    def value(x):
        x = np.asarray(x, dtype=float)[..., 0]
        low = 0.5 * k * x * x
        mid = f1 + (k - 1.0) * (x - 1.0) + 0.5 * (x * x - 1.0)
        high = f2 + (1.0 - k) * (x - 2.0) + 0.5 * k * (x * x - 4.0)
        return np.where(x < 1.0, low, np.where(x < 2.0, mid, high))

    return Objective(dim=1, lipschitz=k, kappa=k, value=value, gradient=gradient,
                     name=f"piecewise[{k:g}]")


def make_huber(dim: int = 1, delta: float = 1.0) -> Objective:
    """Separable Huber loss. Convex and 1-smooth, but flat-sloped far from 0,
    so it is treated as non-strongly convex (kappa = inf)."""
    if dim < 1 or not delta > 0:
        raise ValueError("dim must be >= 1 and delta > 0")

    def value(x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        return np.sum(np.where(a <= delta, 0.5 * x * x, delta * (a - 0.5 * delta)), axis=-1)

    def gradient(x):
        return np.clip(np.asarray(x, dtype=float), -delta, delta)

    return Objective(dim=dim, lipschitz=1.0, kappa=math.inf, value=value,
                     gradient=gradient, name=f"huber[{dim},{delta:g}]")


BUILTINS = {
    "quadratic": make_quadratic,
    "piecewise": make_piecewise,
    "huber": make_huber,
}


def make_objective(name: str, **params) -> Objective:
    """Look up a builtin objective by name (used by the CLI)."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown objective {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)


def hessian_fd(obj: Objective, x, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Hessian of ``obj`` at ``x`` (shape ``(..., n, n)``).

    Well defined at gradient kinks, where it returns the mean of the one-sided
    slopes over ``[x - h, x + h]``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((obj.gradient(x + e) - obj.gradient(x - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def curvature_average(obj: Objective, q, p, beta: float, nodes: int = 1000) -> np.ndarray:
    """Curvature-averaged damping matrix ``(1/L) * int_0^beta Hess f(q + tau p) dtau``.

    Composite midpoint rule with ``nodes`` nodes; the Hessian comes from
    :func:`hessian_fd`.  ``beta`` may be negative (the interval is then
    traversed backwards, as in the time-varying schedule for t < 1).
    """
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    n = q.shape[-1]
    if beta == 0.0:
        return np.zeros((n, n))
    tau = beta * (np.arange(nodes) + 0.5) / nodes
    pts = q[None, :] + tau[:, None] * p[None, :]
    H = hessian_fd(obj, pts)
    return H.sum(axis=0) * (beta / nodes) / obj.lipschitz


# interface aliases
make_section5 = make_piecewise
BUILTINS["section5"] = make_piecewise

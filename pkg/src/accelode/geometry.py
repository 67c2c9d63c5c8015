"""
Phase-plane contours (n = 1) and area-contraction diagnostics.

A contour is a closed polygon in the (q, p) plane.  Mapping a contour maps
its vertices; to keep the polygon close to the curved image, pre-image edges
whose image is long are bisected until every image edge is short.

Sign convention: counter-clockwise polygons have positive signed area.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import shapely

from .dynamics import DampingSchedule, PhasePoint, coefficients, non_potential_force
from .integrators import StepperConfig, rk4_flow, semi_implicit_step
from .objectives import Objective, hessian_fd

REFINE_FRACTION = 1e-2
MAX_REFINE_ROUNDS = 40
MAX_VERTICES = 2_000_000
DEGENERATE_AREA = 1e-12
BISECT_TOL = 1e-10
RADIAL_NODES = 64


class Contour:
    """Closed polygon of phase points, stored as an ``(m, 2)`` array of (q, p).

    With ``validate=True`` (the default) the polygon must have at least three
    vertices, be simple, and enclose non-zero area.  Images of contours under
    the discrete map are built with ``validate=False`` because for large steps
    they may fold over themselves.
    """

    def __init__(self, vertices, validate: bool = True):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"vertices must have shape (m, 2), got {v.shape}")
        self.vertices = v
        if validate:
            if len(v) < 3:
                raise ValueError("a contour needs at least 3 vertices")
            if not shapely.LinearRing(v).is_simple:
                raise ValueError("contour is self-intersecting")
            if abs(signed_area(self)) <= DEGENERATE_AREA:
                raise ValueError("contour encloses zero area")

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Contour({len(self)} vertices, area={signed_area(self):.6g})"

    @property
    def q(self) -> np.ndarray:
        return self.vertices[:, 0]

    @property
    def p(self) -> np.ndarray:
        return self.vertices[:, 1]

    def phase_points(self) -> PhasePoint:
        """All vertices as one batched phase point with ``q, p`` of shape ``(m, 1)``."""
        return PhasePoint(self.vertices[:, :1], self.vertices[:, 1:])

    @property
    def is_degenerate(self) -> bool:
        return abs(signed_area(self)) < DEGENERATE_AREA

    def diameter(self) -> float:
        return _diameter(self.vertices)

    def radii(self) -> np.ndarray:
        return np.hypot(self.q, self.p)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["q", "p"])
            for q, p in self.vertices:
                w.writerow([repr(float(q)), repr(float(p))])

    @classmethod
    def from_csv(cls, path, validate: bool = True) -> "Contour":
        with open(Path(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([[float(r["q"]), float(r["p"])] for r in rows], validate=validate)


def _diameter(v: np.ndarray, sample: int = 2000) -> float:
    if len(v) > sample:
        v = v[np.linspace(0, len(v) - 1, sample).astype(int)]
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def _shoelace(v: np.ndarray) -> float:
    v = v - v.mean(axis=0)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def signed_area(c: Contour) -> float:
    """Shoelace area; positive for counter-clockwise contours."""
    return _shoelace(c.vertices)


def circle_contour(center: PhasePoint | tuple[float, float], radius: float, m: int = 360) -> Contour:
    """Counter-clockwise regular ``m``-gon inscribed in a circle."""
    if m < 16:
        raise ValueError("use at least 16 vertices")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if isinstance(center, PhasePoint):
        cq, cp = float(center.q[0]), float(center.p[0])
    else:
        cq, cp = map(float, center)
    th = 2.0 * np.pi * np.arange(m) / m
    return Contour(np.column_stack([cq + radius * np.cos(th), cp + radius * np.sin(th)]))


def _hamiltonian(obj: Objective, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    return 0.5 * p * p + obj.value(q[..., None]) / obj.lipschitz


def level_set_contour(obj: Objective, energy: float, m: int = 1000) -> Contour:
    """Counter-clockwise polygon on ``{0.5 p^2 + f(q)/L = energy}``.

    Each vertex is found by bisection along a ray from the origin, which is
    valid because the energy increases along rays for strongly convex f.
    """
    if obj.dim != 1:
        raise ValueError("level sets are built for one-dimensional objectives only")
    if not energy > 0:
        raise ValueError("energy must be positive")
    th = 2.0 * np.pi * np.arange(m) / m
    cq, cp = np.cos(th), np.sin(th)
    lo = np.zeros(m)
    hi = np.ones(m)
    for _ in range(200):
        short = _hamiltonian(obj, hi * cq, hi * cp) < energy
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise RuntimeError("level set is unbounded along some ray (objective not strongly convex?)")
    while np.max(hi - lo) > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        below = _hamiltonian(obj, mid * cq, mid * cp) < energy
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    r = 0.5 * (lo + hi)
    return Contour(np.column_stack([r * cq, r * cp]))


def _map_vertices(fmap: Callable[[PhasePoint], PhasePoint], v: np.ndarray) -> np.ndarray:
    z = fmap(PhasePoint(v[:, :1], v[:, 1:]))
    return np.column_stack([z.q[:, 0], z.p[:, 0]])


def refine_and_map(fmap: Callable[[PhasePoint], PhasePoint], pre: np.ndarray,
                   threshold: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Map polygon vertices, bisecting pre-image edges whose image is too long.

    ``threshold`` defaults to ``1e-2`` times the image diameter.  Inserting
    midpoints leaves the pre-image polygon (and its area) unchanged.  Returns
    ``(refined_pre_image, image)``.
    """
    pre = np.asarray(pre, dtype=float)
    img = _map_vertices(fmap, pre)
    if threshold is None:
        threshold = REFINE_FRACTION * max(_diameter(img), 1e-12 * _diameter(pre))
    for _ in range(MAX_REFINE_ROUNDS):
        edge = np.hypot(*(np.roll(img, -1, axis=0) - img).T)
        long = np.flatnonzero(edge > threshold)
        if long.size == 0 or len(pre) + long.size > MAX_VERTICES:
            break
        mids = 0.5 * (pre[long] + np.roll(pre, -1, axis=0)[long])
        pre = np.insert(pre, long + 1, mids, axis=0)
        img = np.insert(img, long + 1, _map_vertices(fmap, mids), axis=0)
    return pre, img


def _discrete_map(obj, sched, t, cfg, coeffs=None):
    return lambda z: semi_implicit_step(obj, sched, z, t, cfg, coeffs=coeffs)


def evolve_contour_discrete(obj: Objective, sched: DampingSchedule, c: Contour, t: float,
                            cfg: StepperConfig, refine_threshold: float | None = None) -> Contour:
    """Image of ``c`` under one semi-implicit Euler step (with edge refinement)."""
    _check_1d(obj)
    _, img = refine_and_map(_discrete_map(obj, sched, t, cfg), c.vertices, refine_threshold)
    return Contour(img, validate=False)


def evolve_contour_flow(obj: Objective, sched: DampingSchedule, c: Contour, t0: float, t1: float,
                        substeps: int) -> Contour:
    """Image of ``c`` under the RK4 reference flow from ``t0`` to ``t1`` (no refinement)."""
    _check_1d(obj)
    z = rk4_flow(obj, sched, c.phase_points(), t0, t1, substeps)
    return Contour(np.column_stack([z.q[:, 0], z.p[:, 0]]), validate=False)


def _check_1d(obj: Objective) -> None:
    if obj.dim != 1:
        raise ValueError("contour diagnostics are implemented for n = 1 only")


def line_integral(obj: Objective, sched: DampingSchedule, v: np.ndarray, t: float,
                  coeffs=None) -> float:
    """Trapezoid-rule ``closed integral of f_np dq`` along the polygon ``v``."""
    z = PhasePoint(v[:, :1], v[:, 1:])
    f = non_potential_force(obj, sched, z, t, coeffs=coeffs)[:, 0]
    dq = np.roll(v[:, 0], -1) - v[:, 0]
    return float(np.sum(0.5 * (f + np.roll(f, -1)) * dq))


def contraction_integrand(obj: Objective, sched: DampingSchedule, q, p, t: float,
                          coeffs=None) -> np.ndarray:
    """``2d + (beta/L) f''(q + beta p)`` (the area-contraction density)."""
    d, beta = coefficients(sched, t) if coeffs is None else coeffs
    y = np.asarray(q, dtype=float) + beta * np.asarray(p, dtype=float)
    h = hessian_fd(obj, y[..., None])[..., 0, 0]
    return 2.0 * d + beta / (obj.lipschitz * sched.gamma ** 2) * h


def region_integral(func: Callable[[np.ndarray, np.ndarray], np.ndarray], v: np.ndarray,
                    radial_nodes: int = RADIAL_NODES) -> float:
    """Integrate ``func(q, p)`` over the polygon ``v`` (signed by orientation).

    Fan triangulation from the vertex centroid; each thin fan triangle is cut
    into ``radial_nodes`` strips and integrated with the midpoint rule.  Signed
    triangle areas make the sum correct for non-convex polygons as well.
    """
    c = v.mean(axis=0)
    a = v - c
    b = np.roll(a, -1, axis=0)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    mid = 0.5 * (a + b)
    s = (np.arange(radial_nodes) + 0.5) / radial_nodes
    pts = c + s[:, None, None] * mid[None, :, :]
    vals = func(pts[..., 0], pts[..., 1])
    # point c + s*mid has area element cross * s ds (u fixed at the midpoint)
    return float(np.sum(cross * np.sum(vals * s[:, None], axis=0)) / radial_nodes)


def contraction_step(obj: Objective, sched: DampingSchedule, vertices: np.ndarray, t: float,
                     cfg: StepperConfig, refine_threshold: float | None = None,
                     radial_nodes: int = RADIAL_NODES, *,
                     coeffs=None) -> tuple[float, float, float, np.ndarray]:
    """Like :func:`area_contraction_report` but also returns the image vertices.

    ``coeffs`` pins ``(d, beta)`` as in the integrators.
    """
    _check_1d(obj)
    pre, img = refine_and_map(_discrete_map(obj, sched, t, cfg, coeffs), vertices, refine_threshold)
    ts = cfg.step_size
    lhs = _shoelace(img) - _shoelace(np.asarray(vertices, dtype=float))
    line = -ts * line_integral(obj, sched, pre, t, coeffs)
    region = -ts * region_integral(lambda q, p: contraction_integrand(obj, sched, q, p, t, coeffs),
                                   pre, radial_nodes)
    return lhs, line, region, img


def area_contraction_report(obj: Objective, sched: DampingSchedule, c: Contour, t: float,
                            cfg: StepperConfig, refine_threshold: float | None = None,
                            radial_nodes: int = RADIAL_NODES) -> tuple[float, float, float]:
    """Three estimates of the one-step area change ``A_1 - A_0``.

    * ``lhs``: shoelace area of the mapped polygon minus that of ``c``;
    * ``line_integral``: ``-Ts`` times the boundary integral of ``f_np dq``;
    * ``region_integral``: ``-Ts`` times the area integral of the contraction density.
    """
    lhs, line, region, _ = contraction_step(obj, sched, c.vertices, t, cfg, refine_threshold,
                                            radial_nodes)
    return lhs, line, region


def continuous_area_rate(obj: Objective, sched: DampingSchedule, c: Contour, t: float = 0.0) -> float:
    """Instantaneous ``dA/dt = -closed integral of f_np dq`` under the continuous flow."""
    _check_1d(obj)
    return -line_integral(obj, sched, c.vertices, t)


def one_step_areas(obj: Objective, sched: DampingSchedule, energy: float, step_size: float,
                  m: int = 2000, substeps: int = 200) -> tuple[float, float]:
    """Areas enclosed by an energy level set after one step of length ``Ts``.

    Returns ``(continuous_area, discrete_area)``: the RK4 flow over ``[0, Ts]``
    versus one semi-implicit Euler step, both applied to the same vertices.
    """
    c = level_set_contour(obj, energy, m)
    flowed = evolve_contour_flow(obj, sched, c, 0.0, step_size, substeps)
    stepped = _map_vertices(_discrete_map(obj, sched, 0.0, StepperConfig(step_size)), c.vertices)
    return signed_area(flowed), _shoelace(stepped)


@dataclass
class RadiusHistory:
    """Per-step radii of an evolving circle; index k = 0 is the initial circle."""

    max_radius: np.ndarray
    min_radius: np.ndarray
    bound: np.ndarray
    area: np.ndarray


def slowest_trajectory_radii(obj: Objective, sched: DampingSchedule, R: float, step_size: float,
                             steps: int, m: int = 720) -> RadiusHistory:
    """Evolve the radius-``R`` circle for ``steps`` discrete steps.

    ``bound[k] = R (1 - Ts (2d + beta/kappa))^(k/2)``, with kappa taken from
    the schedule.
    """
    _check_1d(obj)
    d, beta = coefficients(sched)
    factor = 1.0 - step_size * (2.0 * d + beta / sched.kappa)
    cfg = StepperConfig(step_size)
    c = circle_contour((0.0, 0.0), R, m)
    mx, mn, area = [R], [float(c.radii().min())], [signed_area(c)]
    v = c.vertices
    for k in range(steps):
        _, v = refine_and_map(_discrete_map(obj, sched, k * step_size, cfg), v)
        r = np.hypot(v[:, 0], v[:, 1])
        mx.append(float(r.max()))
        mn.append(float(r.min()))
        area.append(_shoelace(v))
    ks = np.arange(steps + 1)
    return RadiusHistory(np.array(mx), np.array(mn), R * factor ** (ks / 2.0), np.array(area))


def slowest_trajectory_bound(obj: Objective, sched: DampingSchedule, R: float, step_size: float,
                             steps: int, m: int = 720, rtol: float = 1e-4) -> bool:
    """True if at every step some contour vertex is at distance >= ``bound[k]``."""
    if not 0 < step_size < 1:
        raise ValueError("step_size must lie in (0, 1)")
    h = slowest_trajectory_radii(obj, sched, R, step_size, steps, m)
    return bool(np.all(h.max_radius >= h.bound * (1.0 - rtol)))


# interface alias
prop4_compare = one_step_areas

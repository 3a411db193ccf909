"""Equilibrium crystal shapes in two dimensions, with and without gravity.

The surface energy of a droplet ``V`` inside the unit box is

    E(V) = sum_edges tau(n_edge) * |edge|
           + 2 * m_star * gamma * integral_V x_2 dx,

where ``tau`` is the (anisotropic) surface tension on outward unit
normals and ``gamma`` is a signed gravity coefficient: ``gamma > 0``
penalizes droplet height, which is the physically layered orientation
(dense phase pulled to the bottom).  At ``gamma = 0`` the unconstrained
minimizer at fixed area is the Wulff shape, the intersection of the
half-planes ``x . n <= tau(n)`` dilated to the target area.

``minimize_droplet`` performs projected local descent on polygon
vertices: analytic energy gradient, exact quadratic re-projection onto
the area constraint along vertex normals, and clamping to the unit box
(which yields tangential sliding along the walls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon

_DEGENERATE_EDGE = 1e-13


class SurfaceTension:
    """Surface tension ``tau(theta)`` on outward-normal angles.

    Must be strictly positive; ``even`` declares the symmetry
    ``tau(-n) = tau(n)`` and ``square_symmetric`` invariance under
    quarter turns.  A Lipschitz bound on the circle is estimated from a
    fine angular grid unless supplied.
    """

    def __init__(self, fn: Callable, even: bool = True, square_symmetric: bool = False,
                 lipschitz: Optional[float] = None):
        self.fn = fn
        self.even = even
        self.square_symmetric = square_symmetric
        grid = np.linspace(0.0, 2.0 * np.pi, 2048, endpoint=False)
        vals = np.asarray(fn(grid), dtype=float)
        if not np.all(np.isfinite(vals)) or np.min(vals) <= 0.0:
            raise ValueError("surface tension must be finite and strictly positive")
        if lipschitz is None:
            dv = np.abs(np.diff(np.append(vals, vals[0])))
            lipschitz = float(dv.max() / (grid[1] - grid[0]))
        self.lipschitz = lipschitz

    def __call__(self, theta):
        return np.asarray(self.fn(np.asarray(theta, dtype=float)), dtype=float)

    @classmethod
    def isotropic(cls, value: float = 1.0) -> "SurfaceTension":
        if value <= 0.0:
            raise ValueError("surface tension must be positive")
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), value),
                   even=True, square_symmetric=True, lipschitz=0.0)

    @classmethod
    def ell1(cls) -> "SurfaceTension":
        """``tau(n) = |n_1| + |n_2|``; its Wulff body is the unit square."""
        return cls(lambda t: np.abs(np.cos(t)) + np.abs(np.sin(t)),
                   even=True, square_symmetric=True)

    @classmethod
    def from_angle_table(cls, angles, values) -> "SurfaceTension":
        """Periodic linear interpolation of ``(angle, tau)`` samples."""
        ang = np.mod(np.asarray(angles, dtype=float), 2.0 * np.pi)
        order = np.argsort(ang)
        ang = ang[order]
        val = np.asarray(values, dtype=float)[order]
        ang_ext = np.concatenate([ang, [ang[0] + 2.0 * np.pi]])
        val_ext = np.concatenate([val, [val[0]]])

        def fn(theta):
            t = np.mod(np.asarray(theta, dtype=float) - ang[0], 2.0 * np.pi) + ang[0]
            return np.interp(t, ang_ext, val_ext)

        return cls(fn, even=False, square_symmetric=False)


# -- polygon primitives ----------------------------------------------------

def polygon_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * y1 - x1 * y))


def polygon_height_moment(verts: np.ndarray) -> float:
    """``integral_V x_2 dx`` over the polygon (signed, CCW positive)."""
    x, y = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    return float(np.sum((y + y1) * (x * y1 - x1 * y)) / 6.0)


def polygon_centroid(verts: np.ndarray) -> np.ndarray:
    x, y = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cross = x * y1 - x1 * y
    area = 0.5 * cross.sum()
    cx = np.sum((x + x1) * cross) / (6.0 * area)
    cy = np.sum((y + y1) * cross) / (6.0 * area)
    return np.array([cx, cy])


def _collapse_degenerate_edges(verts: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.abs(verts).max()))
    keep = np.linalg.norm(verts - np.roll(verts, 1, axis=0), axis=1) > _DEGENERATE_EDGE * scale
    if keep.sum() < 3:
        raise ValueError("polygon degenerates to fewer than 3 distinct vertices")
    return verts[keep]


def _is_simple(verts: np.ndarray) -> bool:
    return _ShapelyPolygon(verts).is_valid


@dataclass
class DropletShape:
    """Simple, positively oriented polygon inside the unit box."""

    polygon: np.ndarray
    area: float
    phase_fraction: Optional[float] = None

    def __post_init__(self):
        verts = np.asarray(self.polygon, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("polygon must be an (n, 2) array with n >= 3")
        verts = _collapse_degenerate_edges(verts)
        if polygon_area(verts) < 0.0:
            verts = verts[::-1].copy()
        if np.any(verts < -1e-9) or np.any(verts > 1.0 + 1e-9):
            raise ValueError("polygon vertices must lie inside the unit box")
        if not _is_simple(verts):
            raise ValueError("polygon must be simple (non self-intersecting)")
        if abs(polygon_area(verts) - self.area) > 1e-8 * max(1.0, self.area):
            raise ValueError("polygon area is inconsistent with the stated constraint")
        self.polygon = np.clip(verts, 0.0, 1.0)

    @property
    def centroid(self) -> np.ndarray:
        return polygon_centroid(self.polygon)


def phase_fraction(m: float, m_star: float) -> float:
    """Droplet volume fraction ``(m* + m) / (2 m*)`` at magnetization ``m``."""
    if not 0.0 < m_star <= 1.0:
        raise ValueError("m_star must lie in (0, 1]")
    if abs(m) > m_star:
        raise ValueError("phase separation requires |m| <= m*")
    return (m_star + m) / (2.0 * m_star)


# -- Wulff construction ----------------------------------------------------

def wulff_shape(tau: SurfaceTension, area: float, directions: int = 720,
                phase_frac: Optional[float] = None) -> DropletShape:
    """Wulff body of ``tau`` dilated to ``area`` and centred in the box.

    The convex body ``{x : x . n <= tau(n)}`` is approximated by the
    intersection of half-planes over a uniform grid of normal directions
    (discretization error O(directions^-2) for smooth tau), rescaled to
    the requested area and translated to the box centre.
    """
    from scipy.spatial import HalfspaceIntersection

    if area <= 0.0:
        raise ValueError("area must be positive")
    if directions < 3:
        raise ValueError("need at least 3 directions")
    angles = 2.0 * np.pi * np.arange(directions) / directions
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    offsets = tau(angles)
    halfspaces = np.column_stack([normals, -offsets])  # n.x - tau <= 0
    hs = HalfspaceIntersection(halfspaces, np.zeros(2))
    verts = hs.intersections
    order = np.argsort(np.arctan2(verts[:, 1], verts[:, 0]))
    verts = verts[order]
    verts = _dedupe_and_straighten(verts)

    scale = math.sqrt(area / polygon_area(verts))
    verts = verts * scale
    verts = verts - polygon_centroid(verts) + 0.5
    if verts.min() < -1e-12 or verts.max() > 1.0 + 1e-12:
        raise ValueError(
            f"area {area:g} is infeasible: the dilated Wulff shape does not fit in the unit box"
        )
    return DropletShape(np.clip(verts, 0.0, 1.0), area=area, phase_fraction=phase_frac)


def _dedupe_and_straighten(verts: np.ndarray) -> np.ndarray:
    """Merge coincident vertices and drop collinear interior ones."""
    scale = max(1.0, float(np.abs(verts).max()))
    keep = np.linalg.norm(verts - np.roll(verts, 1, axis=0), axis=1) > 1e-9 * scale
    verts = verts[keep]
    prev = np.roll(verts, 1, axis=0)
    nxt = np.roll(verts, -1, axis=0)
    cross = (verts[:, 0] - prev[:, 0]) * (nxt[:, 1] - verts[:, 1]) - (
        verts[:, 1] - prev[:, 1]
    ) * (nxt[:, 0] - verts[:, 0])
    span = np.linalg.norm(nxt - prev, axis=1)
    corner = np.abs(cross) > 1e-9 * scale * span
    return verts[corner] if corner.sum() >= 3 else verts


# -- energy and its gradient ------------------------------------------------

def _edge_geometry(verts: np.ndarray):
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    theta = np.arctan2(-edges[:, 0], edges[:, 1])  # outward normal angle (CCW polygon)
    return edges, lengths, theta


def droplet_energy(shape: DropletShape, tau: SurfaceTension, gamma: float, m_star: float) -> float:
    """Anisotropic perimeter plus the gravitational bulk term."""
    verts = _collapse_degenerate_edges(shape.polygon)
    _, lengths, theta = _edge_geometry(verts)
    surface = float(np.sum(tau(theta) * lengths))
    return surface + 2.0 * m_star * gamma * polygon_height_moment(verts)


def _energy_raw(verts, tau, gamma, m_star):
    _, lengths, theta = _edge_geometry(verts)
    return float(np.sum(tau(theta) * lengths)) + 2.0 * m_star * gamma * polygon_height_moment(verts)


def _energy_gradient(verts, tau, gamma, m_star, dtheta=1e-6):
    """Analytic gradient; tau' by central differences on the angle."""
    edges, lengths, theta = _edge_geometry(verts)
    tvals = tau(theta)
    tprime = (tau(theta + dtheta) - tau(theta - dtheta)) / (2.0 * dtheta)
    with np.errstate(invalid="ignore", divide="ignore"):
        that = edges / lengths[:, None]
        nhat = np.column_stack([that[:, 1], -that[:, 0]])
    that = np.nan_to_num(that)
    nhat = np.nan_to_num(nhat)
    per_edge = tvals[:, None] * that - tprime[:, None] * nhat
    grad = np.roll(per_edge, 1, axis=0) - per_edge  # +d/dv(edge in), -d/dv(edge out)

    x, y = verts[:, 0], verts[:, 1]
    xm, ym = np.roll(x, 1), np.roll(y, 1)   # previous vertex
    xp, yp = np.roll(x, -1), np.roll(y, -1)  # next vertex
    gx = ((y + yp) * yp - (ym + y) * ym) / 6.0
    gy = ((x * yp - xp * y) - xp * (y + yp) + (xm * y - x * ym) + xm * (ym + y)) / 6.0
    grad += 2.0 * m_star * gamma * np.column_stack([gx, gy])
    return grad


def _vertex_normals(verts: np.ndarray) -> np.ndarray:
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nhat = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    nhat = np.nan_to_num(nhat)
    vn = nhat + np.roll(nhat, 1, axis=0)
    norms = np.linalg.norm(vn, axis=1)
    vn[norms > 0] /= norms[norms > 0, None]
    return vn


def _project_area(verts: np.ndarray, target: float, rounds: int = 30) -> Optional[np.ndarray]:
    """Uniform normal offset making the area exact; clamps to the box.

    The polygon area is a quadratic in the offset parameter, so each
    round solves it exactly; clamping may perturb the area, in which
    case the offset is re-solved from the clamped shape.
    """
    out = verts
    for _ in range(rounds):
        a0 = polygon_area(out)
        if abs(a0 - target) <= 1e-12 * max(1.0, target):
            return out
        nu_vec = _vertex_normals(out)
        x, y = out[:, 0], out[:, 1]
        nx, ny = nu_vec[:, 0], nu_vec[:, 1]
        x1, y1 = np.roll(x, -1), np.roll(y, -1)
        nx1, ny1 = np.roll(nx, -1), np.roll(ny, -1)
        b = 0.5 * np.sum(x * ny1 - y * nx1 + nx * y1 - ny * x1)
        c = 0.5 * np.sum(nx * ny1 - ny * nx1)
        const = a0 - target
        if abs(c) < 1e-14:
            if b == 0.0:
                return None
            t = -const / b
        else:
            disc = b * b - 4.0 * c * const
            if disc < 0.0:
                return None
            r = math.sqrt(disc)
            roots = [(-b + r) / (2.0 * c), (-b - r) / (2.0 * c)]
            t = min(roots, key=abs)
        out = np.clip(out + t * nu_vec, 0.0, 1.0)
    if abs(polygon_area(out) - target) <= 1e-10 * max(1.0, target):
        return out
    return None


def _area_gradient(verts: np.ndarray) -> np.ndarray:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * np.column_stack([np.roll(y, -1) - np.roll(y, 1), np.roll(x, 1) - np.roll(x, -1)])


def _tangent_part(field: np.ndarray, area_grad: np.ndarray) -> np.ndarray:
    """Component orthogonal to the area gradient (area-neutral to first order)."""
    aa = float(np.sum(area_grad * area_grad))
    if aa == 0.0:
        return field
    return field - (float(np.sum(field * area_grad)) / aa) * area_grad


def _h1_smooth(grad: np.ndarray, alpha: float) -> np.ndarray:
    """Periodic H1 preconditioner ``(I - alpha * Laplacian)^{-1} grad``.

    Plain gradient flow of the perimeter is a discrete curvature flow and
    only tolerates steps of order (edge length)^2; dividing mode k by
    ``1 + alpha (2 - 2 cos(2 pi k / V))`` cancels that stiffness so every
    shape mode relaxes at a comparable rate.
    """
    v = len(grad)
    k = np.arange(v)
    filt = 1.0 + alpha * (2.0 - 2.0 * np.cos(2.0 * np.pi * k / v))
    out = np.empty_like(grad)
    for col in range(2):
        out[:, col] = np.fft.irfft(np.fft.rfft(grad[:, col]) / filt[: v // 2 + 1], n=v)
    return out


def _descent_direction(verts: np.ndarray, grad: np.ndarray, alpha: float) -> np.ndarray:
    """Smoothed gradient restricted to the feasible cone at ``verts``.

    Zeroes the components that would push wall-clamped coordinates out of
    the box (tangential sliding along the faces) and orthogonalizes
    against the area gradient on the remaining coordinates, so that the
    step is area-neutral to first order and the quadratic re-projection
    only mops up second-order drift.
    """
    a_grad = _area_gradient(verts)
    d = grad
    for _ in range(3):
        binding = ((verts <= 1e-12) & (d > 0.0)) | ((verts >= 1.0 - 1e-12) & (d < 0.0))
        d = np.where(binding, 0.0, d)
        d = _tangent_part(d, np.where(binding, 0.0, a_grad))
        d = _h1_smooth(d, alpha)
    binding = ((verts <= 1e-12) & (d > 0.0)) | ((verts >= 1.0 - 1e-12) & (d < 0.0))
    d = np.where(binding, 0.0, d)
    return _tangent_part(d, np.where(binding, 0.0, a_grad))


def ellipse_polygon(center, semi_axes, n_vertices: int = 256) -> np.ndarray:
    t = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    return np.column_stack(
        [center[0] + semi_axes[0] * np.cos(t), center[1] + semi_axes[1] * np.sin(t)]
    )


def resample_polygon(verts: np.ndarray, n_vertices: int) -> np.ndarray:
    """Redistribute ~``n_vertices`` points along the boundary, keeping corners.

    Every original vertex is preserved (facet corners stay sharp); each
    edge receives extra interpolation points in proportion to its length.
    """
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    extra = np.maximum(n_vertices - len(verts), 0)
    alloc = np.floor(extra * lengths / lengths.sum()).astype(int)
    out = []
    for v, e, k in zip(verts, edges, alloc):
        fracs = np.arange(k + 1) / (k + 1)
        out.append(v + fracs[:, None] * e)
    return np.concatenate(out, axis=0)


def _merge_close_vertices(verts: np.ndarray, threshold: float) -> np.ndarray:
    keep = [verts[0]]
    for v in verts[1:]:
        if np.linalg.norm(v - keep[-1]) >= threshold:
            keep.append(v)
    if len(keep) > 3 and np.linalg.norm(keep[-1] - keep[0]) < threshold:
        keep.pop()
    return np.asarray(keep)


def _maintain_mesh(verts, n_vertices, tau, gamma, m_star, area, energy_now):
    """Merge crowding vertices and respread points along the boundary.

    Descent steps pile vertices up near wall contacts; once edges collapse
    the polygon reads as self-touching and every further step is rejected.
    Merging and on-edge resampling leave the boundary (and hence the
    energy) essentially unchanged, and the result is only adopted when the
    re-projected energy does not increase.
    """
    lengths = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
    target = lengths.sum() / n_vertices
    if lengths.min() >= 0.2 * target:
        return verts, energy_now, False
    merged = _merge_close_vertices(verts, 0.2 * target)
    if len(merged) < 3:
        return verts, energy_now, False
    cand = _project_area(np.clip(resample_polygon(merged, n_vertices), 0.0, 1.0), area)
    if cand is None or not _is_simple(cand):
        return verts, energy_now, False
    energy_cand = _energy_raw(cand, tau, gamma, m_star)
    if energy_cand <= energy_now:
        return cand, energy_cand, True
    return verts, energy_now, False


def minimize_droplet(
    tau: SurfaceTension,
    gamma: float,
    m_star: float,
    area: float,
    n_vertices: int = 256,
    init: Optional[np.ndarray] = None,
    max_iter: int = 5000,
    step0: float = 0.05,
    tol: float = 1e-9,
    with_trace: bool = False,
):
    """Projected descent on vertex positions at fixed area.

    Accepted iterations never increase the energy; a step is rejected
    (and the step size halved) when the offset polygon self-intersects or
    cannot be re-projected onto the area constraint.  Terminates when the
    relative energy decrease stays below ``tol`` or the step underflows.

    Unless ``init`` is given, the run warm-starts from the Wulff shape
    (the exact gamma = 0 minimizer) resampled to ``n_vertices``; faceted
    tensions make the vertex gradient vanish along facet interiors, so a
    cold start cannot sharpen corners, while the warm start leaves the
    descent only the gravity-induced rearrangement to do.
    """
    if not 0.0 < area < 1.0 + 1e-12:
        raise ValueError("area must lie in (0, 1]")
    if n_vertices < 8:
        raise ValueError("need at least 8 vertices")
    if init is None:
        try:
            init = resample_polygon(wulff_shape(tau, area).polygon, n_vertices)
        except ValueError:  # dilated Wulff shape spills out of the box
            r = math.sqrt(area / math.pi)
            init = ellipse_polygon((0.5, 0.5), (1.25 * r, 0.8 * r), n_vertices)
    verts = np.asarray(init, dtype=float)
    if np.any(verts < -1e-12) or np.any(verts > 1 + 1e-12):
        raise ValueError("initial polygon must lie inside the unit box")
    verts = _project_area(np.clip(verts, 0.0, 1.0), area)
    if verts is None:
        raise ValueError("could not project the initial polygon onto the area constraint")

    energy_now = _energy_raw(verts, tau, gamma, m_star)
    trace = [energy_now]
    alpha = (n_vertices / (2.0 * np.pi)) ** 2
    step = step0
    stall = 0
    for _ in range(max_iter):
        verts, energy_now, remeshed = _maintain_mesh(
            verts, n_vertices, tau, gamma, m_star, area, energy_now
        )
        if remeshed:
            step = max(step, step0)  # fresh mesh: retry decent-sized steps
        grad = _energy_gradient(verts, tau, gamma, m_star)
        if not np.any(grad):
            break
        direction = _descent_direction(verts, grad, alpha)
        accepted = False
        while step >= 1e-14:
            cand = np.clip(verts - step * direction, 0.0, 1.0)
            cand = _project_area(cand, area)
            if cand is not None and _is_simple(cand):
                energy_cand = _energy_raw(cand, tau, gamma, m_star)
                if energy_cand <= energy_now:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        decrease = energy_now - energy_cand
        verts = cand
        energy_now = energy_cand
        trace.append(energy_now)
        step = min(step * 1.5, 50.0 * step0)
        if decrease <= tol * max(1.0, abs(energy_now)):
            stall += 1
            if stall >= 50:
                break
        else:
            stall = 0

    shape = DropletShape(verts, area=area)
    if with_trace:
        return shape, np.asarray(trace)
    return shape

"""Piecewise ellipsoidal reachable-set estimates: membership, projection, boundaries."""
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .copositive import QuadraticForm
from .errors import DimensionUnsupported, EmptyLevelSet
from .model import Side


@dataclass(frozen=True, eq=False)
class PiecewiseEllipsoid:
    """{c'x+f <= 0, 0 <= q_neg(x) <= 1} union {c'x+f >= 0, 0 <= q_pos(x) <= 1}."""

    neg_piece: QuadraticForm
    pos_piece: QuadraticForm
    c: np.ndarray
    f: float

    @classmethod
    def from_certificate(cls, cert, sys):
        q1, q2 = cert.pieces()
        return cls(q1, q2, np.asarray(sys.c, dtype=float), float(sys.f))

    @classmethod
    def single(cls, q, c, f=0.0):
        return cls(q, q, np.asarray(c, dtype=float), float(f))

    @property
    def n(self):
        return self.c.shape[0]

    def piece(self, side):
        return self.neg_piece if side is Side.NEG else self.pos_piece

    def switching_value(self, x):
        return np.asarray(x, dtype=float) @ self.c + self.f

    def value(self, x):
        """Piecewise Lyapunov value: the NEG piece where c'x + f < 0, else the POS piece."""
        x = np.asarray(x, dtype=float)
        return np.where(self.switching_value(x) < 0, self.neg_piece(x), self.pos_piece(x))

    def contains(self, x, tol=None):
        tol = DEFAULT_TOLERANCES.tol_mem if tol is None else tol
        x = np.asarray(x, dtype=float)
        s = self.switching_value(x)
        q1 = self.neg_piece(x)
        q2 = self.pos_piece(x)
        in_neg = (s <= tol) & (q1 >= -tol) & (q1 <= 1 + tol)
        in_pos = (s >= -tol) & (q2 >= -tol) & (q2 <= 1 + tol)
        out = in_neg | in_pos
        return bool(out) if out.ndim == 0 else out

    def bounding_box(self):
        """Axis-aligned box containing both full ellipsoids (hence the set)."""
        boxes = [ellipsoid_box(q) for q in (self.neg_piece, self.pos_piece)]
        lo = np.minimum(boxes[0][0], boxes[1][0])
        hi = np.maximum(boxes[0][1], boxes[1][1])
        return lo, hi


def _center_level(q):
    center = q.center()
    return center, 1.0 - q.min_value()


def ellipsoid_box(q):
    """Bounding box of {q <= 1} for positive definite P."""
    center, level = _center_level(q)
    if level < 0:
        raise EmptyLevelSet("quadratic form never drops to 1")
    half = np.sqrt(level * np.diag(np.linalg.inv(q.P)))
    return center - half, center + half


@dataclass(frozen=True, eq=False)
class Ellipsoid2D:
    """{y : (y - center)' Q (y - center) <= level}."""

    Q: np.ndarray
    center: np.ndarray
    level: float

    def __call__(self, y):
        d = np.asarray(y, dtype=float) - self.center
        return np.einsum("...i,ij,...j->...", d, self.Q, d)

    def contains(self, y, tol=1e-9):
        return self(y) <= self.level * (1 + tol) + tol

    def semi_axes(self):
        lam, vec = np.linalg.eigh(self.Q)
        return np.sqrt(self.level / lam), vec

    def boundary(self, samples=256):
        return clipped_ellipse(self.Q, self.center, self.level, samples=samples)


def project_2d(q, coords):
    """Exact shadow of {q <= 1} on coordinates ``(i, j)``.

    The shadow of an ellipsoid with shape P is the ellipse whose inverse
    shape is the (i, j) block of P^-1.
    """
    i, j = coords
    center, level = _center_level(q)
    if level < 0:
        raise EmptyLevelSet(f"level set is empty (radius^2 = {level:.3e})")
    Pinv = np.linalg.inv(q.P)
    idx = [i, j]
    block = Pinv[np.ix_(idx, idx)]
    return Ellipsoid2D(np.linalg.inv(block), center[idx], float(level))


def _line_intersections(Q, center, level, normal, offset):
    """Points of the ellipse boundary on the line normal'y + offset = 0."""
    nn = normal @ normal
    p0 = -offset * normal / nn
    t = np.array([-normal[1], normal[0]])
    d = p0 - center
    a = t @ Q @ t
    b = t @ Q @ d
    c = d @ Q @ d - level
    disc = b * b - a * c
    if disc < 0:
        return []
    root = np.sqrt(disc)
    return [p0 + ((-b - root) / a) * t, p0 + ((-b + root) / a) * t]


def clipped_ellipse(Q, center, level, normal=None, offset=0.0, side=None, samples=256, tol=None):
    """Boundary polyline of an ellipse, optionally clipped to a closed half-plane.

    Boundary points come from radial solves along equally spaced rays from the
    center. When clipped, the arc starts and ends at the exact intersections
    with the line normal'y + offset = 0; an unclipped (or fully inside) ellipse
    is returned as a closed loop.
    """
    tol = DEFAULT_TOLERANCES.tol_mem if tol is None else tol
    if level <= 0:
        return np.zeros((0, 2))
    theta = 2 * np.pi * np.arange(samples) / samples
    u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    r = np.sqrt(level / np.einsum("ki,ij,kj->k", u, Q, u))
    pts = center + r[:, None] * u
    if normal is None:
        return np.vstack([pts, pts[:1]])
    normal = np.asarray(normal, dtype=float)
    keep = side.sign * (pts @ normal + offset) >= -tol
    if keep.all():
        return np.vstack([pts, pts[:1]])
    if not keep.any():
        return np.zeros((0, 2))
    starts = np.flatnonzero(keep & ~np.roll(keep, 1))
    pts = np.roll(pts, -starts[0], axis=0)
    keep = np.roll(keep, -starts[0])
    arc = pts[: np.argmin(keep) if not keep.all() else len(keep)]
    ends = _line_intersections(Q, center, level, normal, offset)
    if len(ends) == 2:
        first, last = ends
        if np.linalg.norm(first - arc[0]) > np.linalg.norm(last - arc[0]):
            first, last = last, first
        arc = np.vstack([first, arc, last])
    return arc


def boundary_polyline(pset, side, samples=256):
    """Boundary of one piece of a planar piecewise ellipsoid, clipped at the switching line."""
    if pset.n != 2:
        raise DimensionUnsupported(f"boundary export needs n = 2, got n = {pset.n}; project first")
    q = pset.piece(side)
    center, level = _center_level(q)
    return clipped_ellipse(q.P, center, level, pset.c, pset.f, side, samples)


def projected_polylines(pset, coords, samples=256):
    """Boundaries of both pieces projected onto ``coords``.

    When c only involves the projected coordinates the switching half-plane is
    visible in the plane and each shadow is clipped to its side; otherwise the
    full shadows are returned (an outer bound of the projected set).
    """
    i, j = coords
    others = np.delete(pset.c, [i, j])
    clip = not np.any(others)
    out = {}
    for side in (Side.NEG, Side.POS):
        ell = project_2d(pset.piece(side), coords)
        if clip:
            out[side] = clipped_ellipse(ell.Q, ell.center, ell.level, pset.c[[i, j]], pset.f,
                                        side, samples)
        else:
            out[side] = ell.boundary(samples)
    return out


@dataclass(frozen=True)
class DominanceReport:
    min_eig_1: float
    min_eig_2: float
    subset_flag: bool
    method: str = "eigen"


def sampled_subset(inner, outer, samples=100_000, seed=0, tol=1e-9):
    """Monte-Carlo check that the boundary of ``inner`` lies in {outer <= 1}."""
    rng = np.random.default_rng(seed)
    for side in (Side.NEG, Side.POS):
        q = inner.piece(side)
        center, level = _center_level(q)
        if level <= 0:
            continue
        u = rng.standard_normal((samples, inner.n))
        r = np.sqrt(level / np.einsum("ki,ij,kj->k", u, q.P, u))
        pts = center + r[:, None] * u
        pts = pts[side.sign * inner.switching_value(pts) >= 0]
        if pts.size and np.max(outer(pts)) > 1 + tol:
            return False
    return True


def compare_dominance(pw, common, tol=1e-6):
    """Eigenvalue dominance P_i - P of the piecewise pieces over a common form.

    Both eigenvalues positive implies the piecewise set lies inside the
    common ellipsoid when all affine terms vanish; otherwise the subset flag
    falls back to boundary sampling.
    """
    l1 = float(np.linalg.eigvalsh(pw.neg_piece.P - common.P).min())
    l2 = float(np.linalg.eigvalsh(pw.pos_piece.P - common.P).min())
    affine = any(np.max(np.abs(q.b)) > tol or abs(q.e) > tol
                 for q in (pw.neg_piece, pw.pos_piece, common))
    if not affine:
        return DominanceReport(l1, l2, bool(l1 > 0 and l2 > 0))
    return DominanceReport(l1, l2, sampled_subset(pw, common), method="sampled")


def monte_carlo_areas(sets, samples=100_000, seed=0):
    """Area (volume) estimates of several sets from one shared uniform sample.

    The sampling box is the union of the sets' bounding boxes.
    """
    boxes = [s.bounding_box() for s in sets]
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((samples, lo.shape[0]))
    box_volume = float(np.prod(hi - lo))
    return [box_volume * float(np.mean(s.contains(pts))) for s in sets]

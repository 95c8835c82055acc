"""Bimodal piecewise affine systems and their switching geometry.

The system is

    dx/dt = A1 x + B w + d1   if c'x + f <  0
            A2 x + B w + d2   if c'x + f >= 0

with the disturbance restricted to the ellipsoid {w : w' Rw w <= 1}.
"""
import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import DimensionMismatch, NotContinuous, NotHurwitz, ZeroNormal


class Region(enum.Enum):
    NEG = "NEG"
    ZERO = "ZERO"
    POS = "POS"


class Side(enum.Enum):
    """Closed half-space {c'x + f <= 0} (NEG) or {c'x + f >= 0} (POS)."""

    NEG = "NEG"
    POS = "POS"

    @property
    def sign(self):
        return -1.0 if self is Side.NEG else 1.0


class EMode(enum.Enum):
    FIXED_ZERO = "FIXED_ZERO"
    FREE = "FREE"


@dataclass(frozen=True)
class EtildeMode:
    e1_mode: EMode
    e2_mode: EMode


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BimodalSystem:
    A1: np.ndarray
    A2: np.ndarray
    B: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    c: np.ndarray
    f: float
    Rw: np.ndarray

    def __post_init__(self):
        A1 = np.atleast_2d(np.asarray(self.A1, dtype=float))
        n = A1.shape[0]
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(n, -1) if B.size == n else B.reshape(-1, 1)
        d1 = np.zeros(n) if self.d1 is None else np.asarray(self.d1, dtype=float).ravel()
        d2 = np.zeros(n) if self.d2 is None else np.asarray(self.d2, dtype=float).ravel()
        Rw = np.atleast_2d(np.asarray(self.Rw, dtype=float))
        values = dict(
            A1=A1,
            A2=np.atleast_2d(np.asarray(self.A2, dtype=float)),
            B=B,
            d1=d1,
            d2=d2,
            c=np.asarray(self.c, dtype=float).ravel(),
            Rw=Rw,
        )
        for name, value in values.items():
            object.__setattr__(self, name, _frozen(value))
        object.__setattr__(self, "f", float(self.f))
        self._validate_shapes()
        Rw = self.Rw
        if not np.allclose(Rw, Rw.T, atol=1e-12, rtol=0):
            raise ValueError("Rw must be symmetric")
        if np.linalg.eigvalsh(Rw).min() <= DEFAULT_TOLERANCES.tol_pd:
            raise ValueError("Rw must be positive definite")

    def _validate_shapes(self):
        n = self.A1.shape[0]
        if self.A1.shape != (n, n) or self.A2.shape != (n, n):
            raise DimensionMismatch(
                f"A1 {self.A1.shape} and A2 {self.A2.shape} must both be {n}x{n}")
        if self.B.ndim != 2 or self.B.shape[0] != n:
            raise DimensionMismatch(f"B has shape {self.B.shape}, expected ({n}, m)")
        m = self.B.shape[1]
        for name in ("d1", "d2", "c"):
            if getattr(self, name).shape != (n,):
                raise DimensionMismatch(
                    f"{name} has shape {getattr(self, name).shape}, expected ({n},)")
        if self.Rw.shape != (m, m):
            raise DimensionMismatch(f"Rw has shape {self.Rw.shape}, expected ({m}, {m})")

    @property
    def n(self):
        return self.A1.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def switching_value(self, x):
        """c'x + f, vectorized over leading axes of ``x``."""
        return np.asarray(x) @ self.c + self.f

    def rhs(self, x, w):
        """Right-hand side, batched over leading axes of ``x`` and ``w``."""
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        neg = (x @ self.c + self.f < 0)[..., None]
        f1 = x @ self.A1.T + self.d1
        f2 = x @ self.A2.T + self.d2
        return np.where(neg, f1, f2) + w @ self.B.T

    def mode_matrices(self, i):
        if i == 1:
            return self.A1, self.d1
        if i == 2:
            return self.A2, self.d2
        raise ValueError(f"mode must be 1 or 2, got {i}")

    def closed_loop(self, K):
        """Return the system with state feedback w_ctrl = -K'x folded into A1, A2."""
        K = np.atleast_2d(np.asarray(K, dtype=float))
        if K.shape == (self.n, self.m):
            K = K.T
        if K.shape != (self.m, self.n):
            raise DimensionMismatch(f"K has shape {K.shape}, expected ({self.m}, {self.n})")
        BK = self.B @ K
        return BimodalSystem(self.A1 - BK, self.A2 - BK, self.B, self.d1, self.d2,
                             self.c, self.f, self.Rw)

    def time_scaled(self, s):
        """Same trajectories on time axis tau = s*t: vector field divided by ``s``."""
        return BimodalSystem(self.A1 / s, self.A2 / s, self.B / s, self.d1 / s,
                             self.d2 / s, self.c, self.f, self.Rw)


@dataclass(frozen=True)
class ContinuityReport:
    ok: bool
    h: np.ndarray
    residual_A: float
    residual_d: float


def check_continuity(sys, tol=None):
    """Find h with A1 - A2 = h c' and d1 - d2 = h f.

    Returns a report whose ``ok`` flag tells whether the least-squares ``h``
    reproduces both differences within tolerance; the residual norms are
    always filled in.
    """
    tol = DEFAULT_TOLERANCES.tol_cont if tol is None else tol
    c = sys.c
    cc = c @ c
    if cc == 0:
        raise ZeroNormal("switching normal c is zero")
    dA = sys.A1 - sys.A2
    h = dA @ c / cc
    res_A = float(np.linalg.norm(dA - np.outer(h, c), "fro"))
    res_d = float(np.linalg.norm(sys.d1 - sys.d2 - h * sys.f))
    ok = res_A <= tol * (1.0 + np.linalg.norm(sys.A1, "fro")) and res_d <= tol
    return ContinuityReport(bool(ok), h, res_A, res_d)


def require_continuous(sys, tol=None):
    report = check_continuity(sys, tol)
    if not report.ok:
        raise NotContinuous(
            f"vector field is discontinuous on the switching surface "
            f"(residuals A: {report.residual_A:.3e}, d: {report.residual_d:.3e})")
    return report.h


def hurwitz_check(A):
    """Largest real part among the eigenvalues of ``A``."""
    return float(np.max(np.linalg.eigvals(np.asarray(A, dtype=float)).real))


def hurwitz_margins(sys):
    return hurwitz_check(sys.A1), hurwitz_check(sys.A2)


def require_hurwitz(sys, strict=True, tol=None):
    """Raise :class:`NotHurwitz` (or warn when ``strict`` is false) unless both modes are stable."""
    tol = DEFAULT_TOLERANCES if tol is None else tol
    margins = hurwitz_margins(sys)
    for i, lam in enumerate(margins, start=1):
        if abs(lam) < tol.hurwitz_warn_band:
            warnings.warn(f"A{i} is marginally stable (max Re = {lam:.2e})", RuntimeWarning)
        if lam >= -tol.tol_hurwitz:
            msg = f"A{i} is not Hurwitz (max Re lambda = {lam:.6g})"
            if strict:
                raise NotHurwitz(msg)
            warnings.warn(msg, RuntimeWarning)
    return margins


@dataclass(frozen=True, eq=False)
class SwitchGeometry:
    """Parametrization of the switching hyperplane and the two half-spaces.

    ``Rhat`` spans ker c' and ``r0`` lies on the hyperplane, both expressed in
    the caller's original coordinates; ``perm`` records which coordinate was
    used as pivot.
    """

    Rhat: np.ndarray
    r0: np.ndarray
    perm: np.ndarray
    origin_region: Region
    c: np.ndarray
    f: float

    @property
    def n(self):
        return self.r0.shape[0]

    @property
    def R(self):
        return np.hstack([self.Rhat, -self.Rhat])


def build_geometry(sys_or_c, f=None):
    """Construct the kernel basis and hyperplane point for c'x + f = 0.

    Accepts either a :class:`BimodalSystem` or the pair ``(c, f)``. The
    coordinate with the largest |c_i| is used as pivot so the ratios
    -c_j / c_pivot stay bounded by one.
    """
    if isinstance(sys_or_c, BimodalSystem):
        c, f = sys_or_c.c, sys_or_c.f
    else:
        c = np.asarray(sys_or_c, dtype=float).ravel()
        f = float(f)
    n = c.shape[0]
    if not np.any(c):
        raise ZeroNormal("switching normal c is zero")
    pivot = int(np.argmax(np.abs(c)))
    perm = np.array([pivot] + [k for k in range(n) if k != pivot])
    cp = c[perm]
    Rhat_p = np.vstack([-cp[1:] / cp[0], np.eye(n - 1)]) if n > 1 else np.zeros((1, 0))
    r0_p = np.zeros(n)
    r0_p[0] = -f / cp[0]
    inv = np.argsort(perm)
    Rhat = Rhat_p[inv]
    r0 = r0_p[inv]
    if f < 0:
        region = Region.NEG
    elif f > 0:
        region = Region.POS
    else:
        region = Region.ZERO
    return SwitchGeometry(_frozen(Rhat), _frozen(r0), perm, region, _frozen(c), float(f))


def etilde_mode(geom):
    """Which constant terms of the Lyapunov pieces are free, given where the origin sits."""
    region = geom.origin_region
    e1 = EMode.FREE if region is Region.POS else EMode.FIXED_ZERO
    e2 = EMode.FREE if region is Region.NEG else EMode.FIXED_ZERO
    return EtildeMode(e1, e2)

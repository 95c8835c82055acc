"""Half-space positivity and hyperplane continuity of quadratic forms.

A quadratic form q(x) = x'Px + 2b'x + e is lifted to the symmetric block
[[P, b], [b', e]] acting on (x, 1). Writing every point of a closed
half-space as r0 + mu*(+-c) + Rhat*t1 - Rhat*t2 with nonnegative
coefficients turns "q > 0 on the half-space" into copositivity of a
2n x 2n matrix. Copositivity itself is relaxed to the split M = S + N with
S positive semidefinite and N entrywise nonnegative.
"""
import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import DimensionMismatch
from .model import Side


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    P: np.ndarray
    b: np.ndarray
    e: float = 0.0

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        object.__setattr__(self, "P", 0.5 * (P + P.T))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())
        object.__setattr__(self, "e", float(self.e))
        if self.P.shape != (self.n, self.n) or self.b.shape != (self.n,):
            raise DimensionMismatch(f"P {self.P.shape} and b {self.b.shape} disagree")

    @classmethod
    def from_matrix(cls, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return cls(P, np.zeros(P.shape[0]), 0.0)

    @property
    def n(self):
        return self.P.shape[0]

    def block(self):
        return lifted_block(self.P, self.b, self.e)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.P, x) + 2.0 * x @ self.b + self.e

    def gradient(self, x):
        return 2.0 * (np.asarray(x, dtype=float) @ self.P + self.b)

    def center(self):
        return -np.linalg.solve(self.P, self.b)

    def min_value(self):
        """Minimum of q over R^n (P must be positive definite)."""
        return self.e - self.b @ np.linalg.solve(self.P, self.b)

    def scaled(self, t):
        return QuadraticForm(t * self.P, t * self.b, t * self.e)


def lifted_block(P, b, e):
    """[[P, b], [b', e]] for numeric arrays or cvxpy expressions."""
    if any(isinstance(v, cp.Expression) for v in (P, b, e)):
        n = P.shape[0]
        col = cp.reshape(b, (n, 1), order="F")
        return cp.bmat([[P, col], [col.T, cp.reshape(e, (1, 1), order="F")]])
    P = np.asarray(P, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    return np.block([[P, b], [b.T, np.array([[float(e)]])]])


def halfspace_transform(geom, side):
    """Columns [r0, s*c, Rhat, -Rhat; 1, 0, 0, 0] with s = -1 for NEG, +1 for POS."""
    n = geom.n
    top = np.hstack([geom.r0[:, None], side.sign * geom.c[:, None], geom.Rhat, -geom.Rhat])
    bottom = np.zeros((1, 2 * n))
    bottom[0, 0] = 1.0
    return np.vstack([top, bottom])


def halfspace_positivity_matrix(q, geom, side):
    """Lift ``q`` to the 2n x 2n matrix whose copositivity certifies q >= 0 on ``side``.

    ``q`` may be a :class:`QuadraticForm` or an (n+1) x (n+1) lifted block,
    numeric or cvxpy.
    """
    block = q.block() if isinstance(q, QuadraticForm) else q
    if block.shape != (geom.n + 1, geom.n + 1):
        raise DimensionMismatch(
            f"form of size {block.shape} does not match geometry of dimension {geom.n}")
    T = halfspace_transform(geom, side)
    return T.T @ block @ T


@dataclass(frozen=True, eq=False)
class CopositiveFragment:
    S: cp.Variable
    N: cp.Variable
    constraints: list


def copositive_relaxation_constraints(M, k=None, name="cop"):
    """Declare S (PSD) and N (symmetric, entrywise >= 0) with M == S + N.

    ``M`` is a k x k cvxpy expression or numeric array.
    """
    k = M.shape[0] if k is None else k
    if M.shape != (k, k):
        raise DimensionMismatch(f"expected {k}x{k} matrix, got {M.shape}")
    S = cp.Variable((k, k), symmetric=True, name=f"{name}_S")
    N = cp.Variable((k, k), symmetric=True, name=f"{name}_N")
    cons = [S >> 0, N >= 0, M == S + N]
    return CopositiveFragment(S, N, cons)


@dataclass(frozen=True, eq=False)
class CopositiveCertificate:
    S: np.ndarray
    N: np.ndarray
    target: np.ndarray

    def check(self, tol=None):
        tol = DEFAULT_TOLERANCES if tol is None else tol
        return (np.linalg.eigvalsh(self.S).min() >= -tol.tol_psd
                and self.N.min() >= -tol.tol_entry
                and np.linalg.norm(self.target - self.S - self.N, "fro") <= tol.tol_split)


def copositive_certificate(M, solver="CLARABEL"):
    """Try to split a numeric matrix as PSD + nonnegative; ``None`` if the relaxation is infeasible."""
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    frag = copositive_relaxation_constraints(cp.Constant(M), M.shape[0])
    prob = cp.Problem(cp.Minimize(0), frag.constraints)
    try:
        with warnings.catch_warnings():
            # inaccurate solutions are judged by check(), not by the solver's flag
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=solver)
    except cp.SolverError:
        return None
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return None
    S = 0.5 * (frag.S.value + frag.S.value.T)
    # the split is made exact; solver error lands in N's sign, which check() audits
    return CopositiveCertificate(S, M - S, M)


def verify_copositive_sampled(M, samples, rng=None):
    """Minimum of x'Mx over random unit-norm vectors drawn from the nonnegative orthant."""
    M = np.asarray(M, dtype=float)
    rng = np.random.default_rng(rng)
    k = M.shape[0]
    x = rng.dirichlet(np.ones(k), size=samples)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return float(np.min(np.einsum("si,ij,sj->s", x, M, x)))


def _edge_minimum(a, b, d):
    """Exact min of [cos t, sin t] [[a, b], [b, d]] [cos t, sin t]' over t in [0, pi/2]."""
    best = min(a, d)
    lam, vec = np.linalg.eigh(np.array([[a, b], [b, d]]))
    for j in range(2):
        v = vec[:, j]
        if np.all(v >= 0) or np.all(v <= 0):
            best = min(best, lam[j])
    return best


def copositive_audit(M, samples=4000, seed=0):
    """Deterministic lower estimate of min x'Mx over unit x >= 0.

    Exact on every one-dimensional face of the orthant (pairs of coordinates),
    sampled in the interior.
    """
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    k = M.shape[0]
    best = float(np.min(np.diag(M)))
    for i in range(k):
        for j in range(i + 1, k):
            best = min(best, _edge_minimum(M[i, i], M[i, j], M[j, j]))
    if k > 2:
        best = min(best, verify_copositive_sampled(M, samples, seed))
    return float(best)


def hyperplane_transform(geom):
    """Columns [r0, Rhat; 1, 0]; the -Rhat copies only duplicate equalities."""
    n = geom.n
    top = np.hstack([geom.r0[:, None], geom.Rhat])
    bottom = np.zeros((1, n))
    bottom[0, 0] = 1.0
    return np.vstack([top, bottom])


def hyperplane_equality_constraints(geom, dP, db, de):
    """Scalar expressions that must vanish for q1 - q2 to be zero on the hyperplane.

    Works with numeric or cvxpy arguments; returns the upper triangle of
    T'[[dP, db], [db', de]]T.
    """
    T = hyperplane_transform(geom)
    G = T.T @ lifted_block(dP, db, de) @ T
    n = geom.n
    return [G[i, j] for i in range(n) for j in range(i, n)]


def hyperplane_residual(geom, q1, q2):
    """max |equality residual| for a numeric pair of forms."""
    vals = hyperplane_equality_constraints(geom, q1.P - q2.P, q1.b - q2.b, q1.e - q2.e)
    return float(np.max(np.abs(vals))) if vals else 0.0


def _param_layout(n):
    iu = np.triu_indices(n)
    return iu, len(iu[0])


def unpack_difference(params, n):
    """Inverse of the parameter layout used by :func:`hyperplane_equality_map`."""
    iu, k = _param_layout(n)
    dP = np.zeros((n, n))
    dP[iu] = params[:k]
    dP = dP + np.triu(dP, 1).T
    return dP, params[k:k + n], params[k + n]


def hyperplane_equality_map(geom):
    """Matrix L with L @ params = equality residuals.

    ``params`` stacks the upper triangle of dP, then db, then de.
    """
    n = geom.n
    _, k = _param_layout(n)
    dim = k + n + 1
    cols = []
    for j in range(dim):
        unit = np.zeros(dim)
        unit[j] = 1.0
        cols.append(hyperplane_equality_constraints(geom, *unpack_difference(unit, n)))
    return np.array(cols, dtype=float).T

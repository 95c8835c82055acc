"""Assembly of the reachable-set SDPs for a fixed decay rate alpha.

Two problem families are built:

* ``piecewise``: two quadratic pieces glued continuously on the switching
  hyperplane, each positive on its closed half-space, each satisfying a
  region-restricted dissipation LMI (S-procedure multipliers gamma, sigma).
* ``common``: a single quadratic x'Px satisfying both modes' LMIs.

Each family has a cvxpy builder and an independent dense NumPy builder
(`piecewise_block`, `common_block`) used to audit solver output.
"""
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .config import DEFAULT_TOLERANCES
from .copositive import (
    QuadraticForm,
    copositive_audit,
    copositive_relaxation_constraints,
    halfspace_positivity_matrix,
    hyperplane_equality_constraints,
    lifted_block,
)
from .errors import InvalidAlpha
from .model import EMode, Side, build_geometry, etilde_mode, require_continuous, require_hurwitz

PIECEWISE = "piecewise"
COMMON = "common"


class AffineTermsWarning(UserWarning):
    """The common-quadratic baseline ignores d1, d2 and f."""


def _sym(expr):
    return 0.5 * (expr + expr.T)


def _col(v, k):
    return cp.reshape(v, (k, 1), order="F")


def _scalar(v):
    return cp.reshape(v, (1, 1), order="F")


@dataclass(eq=False)
class SdpProblem:
    """Conic program: maximize ``objective`` subject to named constraint families.

    ``psd_constraints`` entries must be PSD, ``nonneg_constraints`` entrywise
    nonnegative and ``eq_constraints`` identically zero.
    """

    kind: str
    alpha: float
    vars: dict = field(default_factory=dict)
    psd_constraints: list = field(default_factory=list)
    nonneg_constraints: list = field(default_factory=list)
    eq_constraints: list = field(default_factory=list)
    objective: object = None
    fixed: dict = field(default_factory=dict)

    def declare(self, name, shape=(), symmetric=False):
        if name in self.vars:
            raise KeyError(f"variable {name!r} declared twice")
        var = cp.Variable(shape, symmetric=symmetric, name=name)
        self.vars[name] = var
        return var

    def constraints(self):
        cons = [_sym(expr) >> 0 for _, expr in self.psd_constraints]
        cons += [expr >= 0 for _, expr in self.nonneg_constraints]
        cons += [expr == 0 for _, expr in self.eq_constraints]
        return cons

    def to_cvxpy(self):
        return cp.Problem(cp.Maximize(self.objective), self.constraints())

    def referenced_variables(self):
        seen = set()
        for group in (self.psd_constraints, self.nonneg_constraints, self.eq_constraints):
            for _, expr in group:
                seen.update(v.name() for v in expr.variables())
        return seen

    def dump(self):
        """Self-describing dense form: every constraint as constant + sum_k coeff_k * param_k.

        Each scalar parameter is one entry (or one symmetric pair) of a
        declared variable.
        """
        params = []
        for name, var in self.vars.items():
            shape = var.shape
            if len(shape) == 2 and var.is_symmetric():
                idx = [(i, j) for i in range(shape[0]) for j in range(i, shape[1])]
            else:
                idx = list(np.ndindex(*shape)) if shape else [()]
            params.extend((name, var, ix) for ix in idx)

        def zero_all():
            for var in self.vars.values():
                var.value = np.zeros(var.shape) if var.shape else 0.0

        def unit(var, ix):
            val = np.zeros(var.shape) if var.shape else 1.0
            if var.shape:
                val[ix] = 1.0
                if len(ix) == 2:
                    val[ix[::-1]] = 1.0
            var.value = val

        def affine(expr):
            zero_all()
            const = np.atleast_1d(np.asarray(expr.value, dtype=float))
            coeffs = []
            for k, (_, var, ix) in enumerate(params):
                if var.name() not in {v.name() for v in expr.variables()}:
                    continue
                unit(var, ix)
                delta = np.atleast_1d(np.asarray(expr.value, dtype=float)) - const
                var.value = np.zeros(var.shape) if var.shape else 0.0
                if np.any(delta):
                    coeffs.append({"param": k, "matrix": delta.tolist()})
            return {"constant": const.tolist(), "coefficients": coeffs}

        out = {
            "kind": self.kind,
            "alpha": self.alpha,
            "params": [{"var": name, "index": list(ix)} for name, _, ix in params],
            "variables": {name: list(var.shape) for name, var in self.vars.items()},
            "fixed": {k: float(v) for k, v in self.fixed.items()},
            "psd": [dict(name=name, **affine(expr)) for name, expr in self.psd_constraints],
            "nonneg": [dict(name=name, **affine(expr)) for name, expr in self.nonneg_constraints],
            "eq": [dict(name=name, **affine(expr)) for name, expr in self.eq_constraints],
            "objective": dict(sense="maximize", **affine(self.objective)),
        }
        for var in self.vars.values():
            var.value = None
        return out


def _mode_sign(i):
    # mode 1 lives on c'x + f <= 0, mode 2 on c'x + f >= 0
    return -1.0 if i == 1 else 1.0


def mode_lmi_expr(sys, i, P, b, e, alpha, gamma, sigma):
    """cvxpy expression of the (n+m+1)-square dissipation block for mode ``i`` (required <= 0)."""
    A, d = sys.mode_matrices(i)
    B, Rw, c, f = sys.B, sys.Rw, sys.c, sys.f
    n, m = sys.n, sys.m
    s = _mode_sign(i)
    blk11 = A.T @ P + P @ A + alpha * P
    blk21 = B.T @ P
    blk22 = -(gamma + alpha) * Rw
    row31 = P @ d + A.T @ b + alpha * b + s * sigma * c
    row32 = B.T @ b
    delta = alpha * e + 2 * (d @ b) + gamma + 2 * s * f * sigma
    r31 = _col(row31, n)
    r32 = _col(row32, m)
    return cp.bmat([
        [blk11, blk21.T, r31],
        [blk21, blk22, r32],
        [r31.T, r32.T, _scalar(delta)],
    ])


def piecewise_block(sys, i, P, b, e, alpha, gamma, sigma):
    """Dense version of :func:`mode_lmi_expr`, written out entry block by entry block."""
    A, d = sys.mode_matrices(i)
    B, Rw, c, f = sys.B, sys.Rw, sys.c, sys.f
    n, m = sys.n, sys.m
    s = _mode_sign(i)
    P = np.asarray(P, dtype=float)
    b = np.asarray(b, dtype=float)
    M = np.zeros((n + m + 1, n + m + 1))
    M[:n, :n] = A.T @ P + P @ A + alpha * P
    M[n:n + m, :n] = B.T @ P
    M[:n, n:n + m] = P @ B
    M[n:n + m, n:n + m] = -(gamma + alpha) * Rw
    row = P @ d + A.T @ b + alpha * b + s * sigma * c
    M[-1, :n] = row
    M[:n, -1] = row
    M[-1, n:n + m] = b @ B
    M[n:n + m, -1] = b @ B
    M[-1, -1] = alpha * e + 2 * b @ d + gamma + 2 * s * f * sigma
    return M


def common_lmi_expr(sys, i, P, alpha):
    A, _ = sys.mode_matrices(i)
    B = sys.B
    return cp.bmat([[A.T @ P + P @ A + alpha * P, P @ B], [B.T @ P, -alpha * sys.Rw]])


def common_block(sys, i, P, alpha):
    A, _ = sys.mode_matrices(i)
    P = np.asarray(P, dtype=float)
    top = np.hstack([A.T @ P + P @ A + alpha * P, P @ sys.B])
    bottom = np.hstack([sys.B.T @ P, -alpha * sys.Rw])
    return np.vstack([top, bottom])


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha <= 0:
        raise InvalidAlpha(f"alpha must be a positive finite number, got {alpha}")


def _add_copositive(problem, name, M, corner_zero=False):
    """Relax copositivity of ``M``.

    With ``corner_zero`` (M[0, 0] identically 0) the exact reduction
    "M[0, 1:] >= 0 and M[1:, 1:] copositive" is used instead; the plain split
    would pin S[0, :] = 0 and leave the cone without interior.
    """
    if corner_zero:
        problem.nonneg_constraints.append((f"{name}_row0", M[0, 1:]))
        M = M[1:, 1:]
    frag = copositive_relaxation_constraints(M, name=name)
    problem.vars[frag.S.name()] = frag.S
    problem.vars[frag.N.name()] = frag.N
    problem.psd_constraints.append((f"{name}_S", frag.S))
    problem.nonneg_constraints.append((f"{name}_N", frag.N))
    problem.eq_constraints.append((f"{name}_split", M - frag.S - frag.N))


def build_piecewise_lyapunov(sys, geom=None, emode=None, alpha=None, tol=None, weights=(1.0, 1.0),
                      preflight=True, floor=None):
    """Piecewise-quadratic reachable-set SDP at fixed ``alpha``.

    ``floor`` (optional n x n matrix) adds P_i - floor >= eps_pd*I, forcing
    both pieces to dominate a given quadratic, e.g. a common-Lyapunov P.
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol
    _check_alpha(alpha)
    if preflight:
        require_continuous(sys, tol.tol_cont)
        require_hurwitz(sys, strict=True, tol=tol)
    geom = build_geometry(sys) if geom is None else geom
    emode = etilde_mode(geom) if emode is None else emode
    n = sys.n
    pr = SdpProblem(kind=PIECEWISE, alpha=float(alpha))
    P1 = pr.declare("P1", (n, n), symmetric=True)
    P2 = pr.declare("P2", (n, n), symmetric=True)
    b1 = pr.declare("b1", (n,))
    b2 = pr.declare("b2", (n,))
    e = {}
    for k, mode in ((1, emode.e1_mode), (2, emode.e2_mode)):
        if mode is EMode.FREE:
            e[k] = pr.declare(f"e{k}")
        else:
            e[k] = cp.Constant(0.0)
            pr.fixed[f"e{k}"] = 0.0
    gam = {k: pr.declare(f"gamma{k}") for k in (1, 2)}
    sig = {k: pr.declare(f"sigma{k}") for k in (1, 2)}

    eye = np.eye(n)
    pr.psd_constraints.append(("P1_pd", P1 - tol.eps_pd * eye))
    pr.psd_constraints.append(("P2_pd", P2 - tol.eps_pd * eye))
    if floor is not None:
        floor = np.asarray(floor, dtype=float)
        pr.psd_constraints.append(("P1_floor", P1 - floor - tol.eps_pd * eye))
        pr.psd_constraints.append(("P2_floor", P2 - floor - tol.eps_pd * eye))

    for k, expr in enumerate(hyperplane_equality_constraints(geom, P1 - P2, b1 - b2, e[1] - e[2])):
        pr.eq_constraints.append((f"hyperplane_{k}", expr))

    Z1 = lifted_block(P1, b1, e[1])
    Z2 = lifted_block(P2, b2, e[2])
    # the corner entry is q(r0); it vanishes identically when r0 = 0 and e is pinned
    origin_on_plane = not np.any(geom.r0)
    _add_copositive(pr, "cop_neg", halfspace_positivity_matrix(Z1, geom, Side.NEG),
                    corner_zero=origin_on_plane and emode.e1_mode is EMode.FIXED_ZERO)
    _add_copositive(pr, "cop_pos", halfspace_positivity_matrix(Z2, geom, Side.POS),
                    corner_zero=origin_on_plane and emode.e2_mode is EMode.FIXED_ZERO)

    for k, (P, b) in ((1, (P1, b1)), (2, (P2, b2))):
        pr.psd_constraints.append(
            (f"lmi{k}", -mode_lmi_expr(sys, k, P, b, e[k], alpha, gam[k], sig[k])))
        pr.nonneg_constraints.append((f"gamma{k}", gam[k]))
        pr.nonneg_constraints.append((f"sigma{k}", sig[k]))

    pr.objective = weights[0] * cp.trace(P1) + weights[1] * cp.trace(P2)
    return pr


def build_common_lyapunov(sys, alpha, tol=None, preflight=True):
    """Single quadratic x'Px satisfying both modes' dissipation LMIs at ``alpha``."""
    tol = DEFAULT_TOLERANCES if tol is None else tol
    _check_alpha(alpha)
    if np.any(sys.d1) or np.any(sys.d2) or sys.f != 0:
        warnings.warn("common quadratic baseline ignores affine terms d1, d2, f",
                      AffineTermsWarning)
    if preflight:
        require_hurwitz(sys, strict=True, tol=tol)
    n = sys.n
    pr = SdpProblem(kind=COMMON, alpha=float(alpha))
    P = pr.declare("P", (n, n), symmetric=True)
    pr.psd_constraints.append(("P_pd", P - tol.eps_pd * np.eye(n)))
    for k in (1, 2):
        pr.psd_constraints.append((f"lmi{k}", -common_lmi_expr(sys, k, P, alpha)))
    pr.objective = cp.trace(P)
    return pr


@dataclass
class ResidualReport:
    """Constraint violations, each >= 0 (0 means satisfied)."""

    entries: dict

    @property
    def max_violation(self):
        return max(self.entries.values(), default=0.0)

    def passes(self, tol):
        return self.max_violation <= tol

    def to_dict(self):
        return {k: float(v) for k, v in self.entries.items()}


def _psd_deficit(M):
    M = 0.5 * (M + M.T)
    return max(0.0, -float(np.linalg.eigvalsh(M).min()))


def residuals(cert, sys, tol=None, geom=None):
    """Re-verify a certificate from its raw matrices, without any solver.

    PSD deficits are ``max(0, -lambda_min)`` of each block that must be PSD;
    copositivity of the half-space matrices is audited directly (exact on
    orthant edges, sampled inside), not through the S + N split.
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol
    eye = np.eye(sys.n)
    out = {}
    if cert.kind == COMMON:
        P = cert.P1
        out["P_pd"] = _psd_deficit(P - tol.eps_pd * eye)
        for k in (1, 2):
            out[f"lmi{k}"] = _psd_deficit(-common_block(sys, k, P, cert.alpha))
        return ResidualReport(out)

    geom = build_geometry(sys) if geom is None else geom
    emode = etilde_mode(geom)
    q1 = QuadraticForm(cert.P1, cert.b1, cert.e1)
    q2 = QuadraticForm(cert.P2, cert.b2, cert.e2)
    out["P1_pd"] = _psd_deficit(cert.P1 - tol.eps_pd * eye)
    out["P2_pd"] = _psd_deficit(cert.P2 - tol.eps_pd * eye)
    eqs = hyperplane_equality_constraints(geom, q1.P - q2.P, q1.b - q2.b, q1.e - q2.e)
    out["hyperplane"] = float(np.max(np.abs(eqs))) if eqs else 0.0
    out["cop_neg"] = max(0.0, -copositive_audit(halfspace_positivity_matrix(q1, geom, Side.NEG)))
    out["cop_pos"] = max(0.0, -copositive_audit(halfspace_positivity_matrix(q2, geom, Side.POS)))
    gam = {1: cert.gamma1, 2: cert.gamma2}
    sig = {1: cert.sigma1, 2: cert.sigma2}
    for k, q in ((1, q1), (2, q2)):
        out[f"lmi{k}"] = _psd_deficit(
            -piecewise_block(sys, k, q.P, q.b, q.e, cert.alpha, gam[k], sig[k]))
        out[f"gamma{k}"] = max(0.0, -gam[k])
        out[f"sigma{k}"] = max(0.0, -sig[k])
    if emode.e1_mode is EMode.FIXED_ZERO:
        out["e1_fixed"] = abs(cert.e1)
    if emode.e2_mode is EMode.FIXED_ZERO:
        out["e2_fixed"] = abs(cert.e2)
    return ResidualReport(out)


def recover_multipliers(sys, q1, q2, alpha, solver="CLARABEL"):
    """Best S-procedure multipliers for given Lyapunov pieces.

    For each mode minimizes t subject to block <= t*I over gamma, sigma >= 0.
    Returns ``{mode: (gamma, sigma, t)}``; t <= 0 means the block is feasible.
    """
    out = {}
    for k, q in ((1, q1), (2, q2)):
        gamma = cp.Variable(nonneg=True)
        sigma = cp.Variable(nonneg=True)
        t = cp.Variable()
        M = mode_lmi_expr(sys, k, q.P, q.b, q.e, alpha, gamma, sigma)
        size = sys.n + sys.m + 1
        prob = cp.Problem(cp.Minimize(t), [_sym(t * np.eye(size) - M) >> 0])
        prob.solve(solver=solver)
        out[k] = (float(gamma.value), float(sigma.value), float(t.value))
    return out


def given_pieces_deficits(sys, P, P1, P2, alpha, solver="CLARABEL"):
    """Worst LMI violations of externally supplied matrices with b = 0, e = 0.

    The common blocks are evaluated directly; for the piecewise pair the
    multipliers are recovered first and the deficit is max(0, t).
    """
    out = {}
    for k in (1, 2):
        out[f"common_lmi{k}"] = _psd_deficit(-common_block(sys, k, np.asarray(P, float), alpha))
    z = np.zeros(sys.n)
    q1 = QuadraticForm(np.asarray(P1, float), z, 0.0)
    q2 = QuadraticForm(np.asarray(P2, float), z, 0.0)
    for k, (gamma, sigma, t) in recover_multipliers(sys, q1, q2, alpha, solver).items():
        out[f"piecewise_lmi{k}"] = max(0.0, t)
        out[f"gamma{k}"] = gamma
        out[f"sigma{k}"] = sigma
    return out

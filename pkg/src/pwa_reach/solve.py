"""Conic solver backend, certificate extraction and the decay-rate search."""
import enum
import math
import os
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .config import DEFAULT_TOLERANCES, SearchConfig
from .copositive import QuadraticForm
from .errors import AllInfeasible, AuditFailed, InvalidAlpha
from .lmi import COMMON, PIECEWISE, build_common_lyapunov, build_piecewise_lyapunov, residuals
from .model import hurwitz_margins, require_continuous, require_hurwitz

DEFAULT_SOLVER = "CLARABEL"


class Status(enum.Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    NUMERICAL_FAILURE = "NUMERICAL_FAILURE"


@dataclass
class SolveOutcome:
    status: Status
    assignment: dict = None
    objective: float = None
    info: str = ""


class CvxpySolver:
    """Solve an :class:`~pwa_reach.lmi.SdpProblem` with a cvxpy backend.

    The backend name comes from ``name``, else ``$PWA_REACH_SOLVER``, else
    Clarabel. ``optimal_inaccurate`` is reported as OPTIMAL; the caller's
    residual audit decides whether the point is usable.
    """

    def __init__(self, name=None, **options):
        self.name = name or os.environ.get("PWA_REACH_SOLVER") or DEFAULT_SOLVER
        self.options = options

    def solve(self, problem):
        prob = problem.to_cvxpy()
        try:
            with warnings.catch_warnings():
                # inaccurate solutions are re-verified by the residual audit
                warnings.simplefilter("ignore", UserWarning)
                prob.solve(solver=self.name, **self.options)
        except cp.SolverError as exc:
            return SolveOutcome(Status.NUMERICAL_FAILURE, info=str(exc))
        status = prob.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return SolveOutcome(Status.INFEASIBLE, info=status)
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return SolveOutcome(Status.NUMERICAL_FAILURE, info=status)
        assignment = {name: var.value for name, var in problem.vars.items()}
        assignment.update(problem.fixed)
        if any(v is None for v in assignment.values()):
            return SolveOutcome(Status.NUMERICAL_FAILURE, info=f"{status}: missing values")
        return SolveOutcome(Status.OPTIMAL, assignment, float(prob.value), status)


@dataclass
class Certificate:
    kind: str
    alpha: float
    P1: np.ndarray
    P2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    e1: float = 0.0
    e2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    objective: float = float("nan")
    audit: dict = field(default_factory=dict)

    @classmethod
    def common(cls, P, alpha, objective=float("nan"), audit=None):
        P = np.asarray(P, dtype=float)
        z = np.zeros(P.shape[0])
        return cls(COMMON, float(alpha), P, P, z, z, objective=objective, audit=audit or {})

    @property
    def P(self):
        return self.P1

    @property
    def n(self):
        return self.P1.shape[0]

    def pieces(self):
        """Lyapunov pieces on the NEG and POS side."""
        return (QuadraticForm(self.P1, self.b1, self.e1),
                QuadraticForm(self.P2, self.b2, self.e2))

    def scaled_pieces(self, t1=1.0, t2=1.0):
        """Copy with P1 and P2 multiplied by ``t1``, ``t2`` (falsification controls)."""
        return Certificate(self.kind, self.alpha, t1 * self.P1, t2 * self.P2, self.b1,
                           self.b2, self.e1, self.e2, self.gamma1, self.gamma2,
                           self.sigma1, self.sigma2, self.objective, {})

    def to_dict(self):
        d = {"kind": self.kind, "alpha": self.alpha, "objective": self.objective}
        if self.kind == COMMON:
            d["P"] = self.P1.tolist()
        else:
            d.update(P1=self.P1.tolist(), P2=self.P2.tolist(), b1=self.b1.tolist(),
                     b2=self.b2.tolist(), e1=self.e1, e2=self.e2, gamma1=self.gamma1,
                     gamma2=self.gamma2, sigma1=self.sigma1, sigma2=self.sigma2)
        d["audit"] = dict(self.audit)
        return d

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == COMMON:
            return cls.common(d["P"], d["alpha"], d.get("objective", float("nan")),
                              d.get("audit"))
        n = len(d["P1"])
        z = [0.0] * n
        return cls(PIECEWISE, float(d["alpha"]), np.array(d["P1"], dtype=float),
                   np.array(d["P2"], dtype=float), np.array(d.get("b1", z), dtype=float),
                   np.array(d.get("b2", z), dtype=float), float(d.get("e1", 0.0)),
                   float(d.get("e2", 0.0)), float(d.get("gamma1", 0.0)),
                   float(d.get("gamma2", 0.0)), float(d.get("sigma1", 0.0)),
                   float(d.get("sigma2", 0.0)), float(d.get("objective", float("nan"))),
                   dict(d.get("audit", {})))


def _clamp(v, tol):
    v = float(v)
    return 0.0 if -tol <= v < 0.0 else v


def extract_certificate(assignment, kind, alpha, sys, tol=None, multiplier_scale=1.0,
                        objective=float("nan")):
    """Turn a solver assignment into an audited :class:`Certificate`.

    ``multiplier_scale`` undoes a time rescaling of the problem (gamma and
    sigma scale with the vector field; P, b, e do not).
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol

    def sym(M):
        M = np.asarray(M, dtype=float)
        return 0.5 * (M + M.T)

    if kind == COMMON:
        cert = Certificate.common(sym(assignment["P"]), alpha, objective)
    else:
        s = multiplier_scale
        cert = Certificate(
            PIECEWISE, float(alpha), sym(assignment["P1"]), sym(assignment["P2"]),
            np.asarray(assignment["b1"], dtype=float), np.asarray(assignment["b2"], dtype=float),
            float(assignment["e1"]), float(assignment["e2"]),
            _clamp(s * assignment["gamma1"], tol.tol_solver),
            _clamp(s * assignment["gamma2"], tol.tol_solver),
            _clamp(s * assignment["sigma1"], tol.tol_solver),
            _clamp(s * assignment["sigma2"], tol.tol_solver),
            objective,
        )
    report = residuals(cert, sys, tol)
    cert.audit = report.to_dict()
    if report.max_violation > 10 * tol.tol_solver:
        worst = max(report.entries, key=report.entries.get)
        raise AuditFailed(
            f"certificate fails re-verification: {worst} = {report.entries[worst]:.3e}", report)
    return cert


def alpha_max(sys):
    """Upper end of the useful decay rates: 2 * min_i (-max Re eig A_i)."""
    return 2.0 * min(-lam for lam in hurwitz_margins(sys))


def _build(sys, kind, alpha, tol, weights, floor):
    if kind == COMMON:
        return build_common_lyapunov(sys, alpha, tol=tol, preflight=False)
    return build_piecewise_lyapunov(sys, alpha=alpha, tol=tol, weights=weights, preflight=False,
                             floor=floor)


def solve_at_alpha(sys, kind, alpha, solver=None, tol=None, weights=(1.0, 1.0), floor=None):
    """One SDP solve at fixed ``alpha``; returns ``(status, certificate_or_None, info)``.

    Decay rates above :func:`alpha_max` are rejected as infeasible without a
    solve. A numerical failure is retried once on the time-rescaled system
    (vector field and alpha divided by the largest |entry| of [A1; A2; B]).
    """
    tol = DEFAULT_TOLERANCES if tol is None else tol
    if not np.isfinite(alpha) or alpha <= 0:
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    solver = solver if isinstance(solver, CvxpySolver) else CvxpySolver(solver)
    top = alpha_max(sys)
    if alpha > top * (1 + 1e-12):
        # for an eigenvector v of A_i, v*(A_i'P + P A_i + alpha P)v = (2 Re lambda + alpha) v*Pv,
        # positive for every P > 0 once alpha exceeds alpha_max: infeasible without solving
        return Status.INFEASIBLE, None, f"alpha {alpha:.6g} exceeds alpha_max {top:.6g}"
    scale = max(float(np.max(np.abs(M))) for M in (sys.A1, sys.A2, sys.B))
    attempts = [(sys, alpha, 1.0)]
    if scale > 0 and scale != 1.0:
        attempts.append((sys.time_scaled(scale), alpha / scale, scale))
    info = ""
    for target, a, s in attempts:
        outcome = solver.solve(_build(target, kind, a, tol, weights, floor))
        if outcome.status is Status.INFEASIBLE:
            return Status.INFEASIBLE, None, outcome.info
        if outcome.status is Status.OPTIMAL:
            try:
                cert = extract_certificate(outcome.assignment, kind, alpha, sys, tol,
                                           multiplier_scale=s, objective=outcome.objective)
                return Status.OPTIMAL, cert, outcome.info
            except AuditFailed as exc:
                info = f"{outcome.info}: {exc}"
                continue
        info = outcome.info
    return Status.NUMERICAL_FAILURE, None, info


@dataclass
class AlphaSample:
    alpha: float
    status: Status
    objective: float
    certificate: Certificate = None


@dataclass
class AlphaSearchResult:
    best_alpha: float
    best_certificate: Certificate
    trace_curve: list

    def curve(self):
        return [(s.alpha, s.status.value, s.objective) for s in self.trace_curve]


def default_grid(sys, config=None):
    config = SearchConfig() if config is None else config
    top = alpha_max(sys)
    return np.geomspace(top * config.grid_floor, top, config.grid_points)


def _golden(evaluate, lo, hi, evals):
    """Golden-section maximization of ``evaluate`` on [lo, hi] using ``evals`` calls."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = evaluate(x1), evaluate(x2)
    used = 2
    while used < evals:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = evaluate(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = evaluate(x2)
        used += 1


def alpha_search(sys, kind=PIECEWISE, alpha_grid=None, config=None, tol=None, solver=None,
                 refine=None, floor=None):
    """Maximize the trace objective over the decay rate alpha.

    Without ``alpha_grid`` a log grid over (0, alpha_max] is scanned and the
    best point refined by golden section; an explicit grid is used as given
    unless ``refine`` is true.
    """
    config = SearchConfig() if config is None else config
    tol = DEFAULT_TOLERANCES if tol is None else tol
    require_continuous(sys, tol.tol_cont)
    require_hurwitz(sys, strict=True, tol=tol)
    solver = CvxpySolver(solver or config.solver)
    refine = alpha_grid is None if refine is None else refine
    grid = default_grid(sys, config) if alpha_grid is None else np.atleast_1d(
        np.asarray(alpha_grid, dtype=float))
    samples = []

    def evaluate(alpha):
        status, cert, _ = solve_at_alpha(sys, kind, float(alpha), solver, tol,
                                         config.trace_weights, floor)
        obj = cert.objective if cert is not None else float("-inf")
        samples.append(AlphaSample(float(alpha), status, obj, cert))
        return obj

    grid_values = [evaluate(a) for a in grid]
    if refine and np.isfinite(max(grid_values)):
        k = int(np.argmax(grid_values))
        lo = grid[k - 1] if k > 0 else grid[k] / 2
        hi = grid[k + 1] if k + 1 < len(grid) else min(grid[k] * 1.5, alpha_max(sys))
        if hi > lo:
            _golden(evaluate, float(lo), float(hi), config.golden_evals)

    feasible = [s for s in samples if s.status is Status.OPTIMAL]
    if not feasible:
        raise AllInfeasible(f"no feasible alpha among {len(samples)} samples",
                            [(s.alpha, s.status.value, s.objective) for s in samples])
    best = min(feasible, key=lambda s: (-s.objective, s.alpha))
    return AlphaSearchResult(best.alpha, best.certificate, samples)


def estimate(sys, kind=PIECEWISE, alpha=None, **kwargs):
    """Convenience wrapper: fixed alpha if given, full search otherwise."""
    grid = None if alpha is None else [alpha]
    return alpha_search(sys, kind, alpha_grid=grid, **kwargs)


"""Disturbed trajectories of bimodal systems and audits against certificates."""
import enum
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import NonFiniteState


class DisturbanceKind(enum.Enum):
    PIECEWISE_CONSTANT_RANDOM = "PIECEWISE_CONSTANT_RANDOM"
    CONSTANT = "CONSTANT"
    EXTREMAL_RANDOM_SIGN = "EXTREMAL_RANDOM_SIGN"


@dataclass(frozen=True)
class DisturbancePolicy:
    kind: DisturbanceKind = DisturbanceKind.PIECEWISE_CONSTANT_RANDOM
    seed: int = 0
    hold_dt: float = 1e-2
    w: tuple = None

    @classmethod
    def constant(cls, w):
        return cls(DisturbanceKind.CONSTANT, w=tuple(np.ravel(w).tolist()))


def _inv_sqrt(Rw):
    lam, vec = np.linalg.eigh(np.atleast_2d(Rw))
    return (vec / np.sqrt(lam)) @ vec.T


def sample_disturbance(policy, Rw, rng=None, size=None):
    """Draw admissible disturbances (w' Rw w <= 1).

    Random: Rw^{-1/2} u with u uniform in the unit ball. Extremal: u uniform
    on the unit sphere. ``size`` adds a leading sample axis.
    """
    Rw = np.atleast_2d(np.asarray(Rw, dtype=float))
    m = Rw.shape[0]
    shape = (1 if size is None else size, m)
    if policy.kind is DisturbanceKind.CONSTANT:
        w = np.asarray(policy.w, dtype=float).reshape(m)
        if w @ Rw @ w > 1 + 1e-12:
            raise ValueError("constant disturbance lies outside the admissible ellipsoid")
        out = np.broadcast_to(w, shape).copy()
    else:
        rng = np.random.default_rng(rng)
        u = rng.standard_normal(shape)
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        if policy.kind is DisturbanceKind.PIECEWISE_CONSTANT_RANDOM:
            u *= rng.random((shape[0], 1)) ** (1.0 / m)
        out = u @ _inv_sqrt(Rw).T
    return out[0] if size is None else out


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    w_values: np.ndarray
    mode_trace: np.ndarray
    dt: float

    def __len__(self):
        return len(self.times)

    def to_csv(self, path):
        n = self.states.shape[1]
        m = self.w_values.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"w{i + 1}" for i in range(m)] + ["mode"]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for t, x, w, mode in zip(self.times, self.states, self.w_values, self.mode_trace):
                vals = [repr(float(t))] + [repr(float(v)) for v in x] + [repr(float(v)) for v in w]
                fh.write(",".join(vals + [str(mode)]) + "\n")


def _hold_windows(n_steps, dt, hold_dt):
    k = np.arange(n_steps)
    return np.floor(k * dt / hold_dt + 1e-9).astype(int)


def integrate_batch(sys, x0s, policies, t_end, dt, record_every=1):
    """Fixed-step RK4 for several trajectories at once.

    Each stage picks the mode from the sign of c'x + f at the stage point;
    the field is continuous across the switching surface, so no event
    handling is required. Trajectory ``k`` draws its disturbances from
    ``default_rng(policies[k].seed)`` and holds each draw for ``hold_dt``.
    """
    if dt <= 0 or t_end < dt:
        raise ValueError(f"need dt > 0 and t_end >= dt (got dt={dt}, t_end={t_end})")
    x = np.array(x0s, dtype=float).reshape(len(policies), sys.n)
    n_steps = int(round(t_end / dt))
    windows = None
    W = []
    for pol in policies:
        win = _hold_windows(n_steps, dt, pol.hold_dt)
        if windows is None:
            windows = win
        elif not np.array_equal(win, windows):
            raise ValueError("all trajectories in a batch must share hold_dt")
        rng = np.random.default_rng(pol.seed)
        W.append(sample_disturbance(pol, sys.Rw, rng, size=int(win[-1]) + 1))
    W = np.stack(W)  # (K, windows, m)
    BW = np.einsum("ij,kwj->kwi", sys.B, W)

    rec_idx = list(range(0, n_steps + 1, record_every))
    if rec_idx[-1] != n_steps:
        rec_idx.append(n_steps)
    K = x.shape[0]
    states = np.empty((len(rec_idx), K, sys.n))
    w_rec = np.empty((len(rec_idx), K, sys.m))
    pos_rec = np.empty((len(rec_idx), K), dtype=bool)

    A1, A2, d1, d2, c, f = sys.A1, sys.A2, sys.d1, sys.d2, sys.c, sys.f

    # einsum rather than BLAS so each row is bit-identical whatever the batch size
    def field(y, bw):
        neg = (np.einsum("ki,i->k", y, c) + f < 0)[:, None]
        f1 = np.einsum("ij,kj->ki", A1, y) + d1
        f2 = np.einsum("ij,kj->ki", A2, y) + d2
        return np.where(neg, f1, f2) + bw

    r = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps + 1):
            win = windows[min(k, n_steps - 1)]
            if r < len(rec_idx) and rec_idx[r] == k:
                states[r] = x
                w_rec[r] = W[:, win]
                pos_rec[r] = np.einsum("ki,i->k", x, c) + f >= 0
                r += 1
            if k == n_steps:
                break
            bw = BW[:, win]
            k1 = field(x, bw)
            k2 = field(x + 0.5 * dt * k1, bw)
            k3 = field(x + 0.5 * dt * k2, bw)
            k4 = field(x + dt * k3, bw)
            x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise NonFiniteState(f"state became non-finite at t = {(k + 1) * dt:.6g}")

    times = np.asarray(rec_idx, dtype=float) * dt
    modes = np.where(pos_rec, "POS", "NEG")
    return [Trajectory(times, states[:, j].copy(), w_rec[:, j].copy(), modes[:, j].copy(), dt)
            for j in range(K)]


def integrate(sys, x0, policy, t_end, dt, record_every=1):
    return integrate_batch(sys, [x0], [policy], t_end, dt, record_every)[0]


def simulate_many(sys, count, seed=0, t_end=30.0, dt=1e-3, hold_dt=1e-2,
                  kind=DisturbanceKind.PIECEWISE_CONSTANT_RANDOM, record_every=1, x0=None,
                  batch=1000):
    """``count`` trajectories from ``x0`` (default: origin), trajectory k seeded with seed + k."""
    x0 = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float)
    out = []
    for start in range(0, count, batch):
        idx = range(start, min(count, start + batch))
        pols = [DisturbancePolicy(kind, seed + k, hold_dt) for k in idx]
        out.extend(integrate_batch(sys, [x0] * len(pols), pols, t_end, dt, record_every))
    return out


@dataclass(frozen=True)
class LyapunovAuditReport:
    violation_fraction: float
    worst_margin: float
    points: int


def _piece_margin(q, alpha, Rw, x, w, xdot):
    V = q(x)
    Vdot = np.einsum("ki,ki->k", q.gradient(x), xdot)
    return Vdot + alpha * V - alpha * np.einsum("ki,ij,kj->k", w, Rw, w), V


def lyapunov_audit(traj, cert, sys, tol=None):
    """Check dV/dt + alpha V - alpha w'Rw w <= 0 at every recorded sample.

    dV/dt is the gradient of the active piece times the exact vector field.
    Samples within dt * |x'| of the switching surface pass if either piece
    satisfies the bound, since V is only piecewise differentiable there.
    """
    tol = DEFAULT_TOLERANCES.tol_audit if tol is None else tol
    x, w = traj.states, traj.w_values
    if len(x) == 0:
        return LyapunovAuditReport(0.0, float("-inf"), 0)
    q1, q2 = cert.pieces()
    xdot = sys.rhs(x, w)
    s = x @ sys.c + sys.f
    g1, V1 = _piece_margin(q1, cert.alpha, sys.Rw, x, w, xdot)
    g2, V2 = _piece_margin(q2, cert.alpha, sys.Rw, x, w, xdot)
    ex1 = g1 - tol * (1 + np.abs(V1))
    ex2 = g2 - tol * (1 + np.abs(V2))
    neg = s < 0
    margin = np.where(neg, g1, g2)
    excess = np.where(neg, ex1, ex2)
    near = np.abs(s) / np.linalg.norm(sys.c) <= traj.dt * np.linalg.norm(xdot, axis=1)
    margin = np.where(near, np.minimum(g1, g2), margin)
    excess = np.where(near, np.minimum(ex1, ex2), excess)
    return LyapunovAuditReport(float(np.mean(excess > 0)), float(np.max(margin)), len(x))


@dataclass(frozen=True)
class ContainmentReport:
    inside_fraction: float
    worst_excess: float
    points: int


def containment_audit(trajs, pset, tol=None):
    """Fraction of sampled states inside the set, and the largest q(x) - 1 seen."""
    if not trajs:
        return ContainmentReport(1.0, float("-inf"), 0)
    x = np.concatenate([t.states for t in trajs])
    inside = pset.contains(x, tol)
    return ContainmentReport(float(np.mean(inside)), float(np.max(pset.value(x) - 1.0)), len(x))


def write_trajectories_csv(trajs, path):
    """All trajectories in one table, tagged by a leading ``traj`` index column."""
    if not trajs:
        raise ValueError("no trajectories to write")
    n = trajs[0].states.shape[1]
    m = trajs[0].w_values.shape[1]
    header = ["traj", "t"] + [f"x{i + 1}" for i in range(n)] + [f"w{i + 1}" for i in range(m)]
    with open(path, "w") as fh:
        fh.write(",".join(header + ["mode"]) + "\n")
        for k, tr in enumerate(trajs):
            block = np.column_stack([tr.times, tr.states, tr.w_values])
            for row, mode in zip(block, tr.mode_trace):
                fh.write(f"{k}," + ",".join(repr(float(v)) for v in row) + f",{mode}\n")
    return path

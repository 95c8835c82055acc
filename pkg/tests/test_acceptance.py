"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``[criterion k] PASS|FAIL: ...`` line to the terminal,
regardless of output capturing.
"""
import time

import numpy as np
import pytest
from scipy.optimize import nnls

from pwa_reach import io
from pwa_reach.copositive import (QuadraticForm, copositive_certificate,
                                  hyperplane_equality_map, unpack_difference,
                                  verify_copositive_sampled)
from pwa_reach.lmi import given_pieces_deficits
from pwa_reach.model import build_geometry
from pwa_reach.reachset import PiecewiseEllipsoid, compare_dominance, monte_carlo_areas, \
    project_2d
from pwa_reach.sim import (DisturbancePolicy, containment_audit, integrate, lyapunov_audit,
                           simulate_many)
from pwa_reach.solve import COMMON, PIECEWISE, Status, alpha_search, solve_at_alpha

from conftest import random_spd, scalar_system


def verdict(capsys, label, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {label}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _fresh(sys, alpha):
    out = {}
    for kind in (PIECEWISE, COMMON):
        status, cert, info = solve_at_alpha(sys, kind, alpha)
        assert status is Status.OPTIMAL, f"{kind} at alpha={alpha}: {info}"
        out[kind] = cert
    return out


def _violation_fraction(trajs, cert, sys):
    reps = [lyapunov_audit(t, cert, sys) for t in trajs]
    return sum(r.violation_fraction * r.points for r in reps) / sum(r.points for r in reps)


def test_criterion_1_scalar_oracle(capsys):
    t0 = time.perf_counter()
    res = alpha_search(scalar_system(), PIECEWISE)
    elapsed = time.perf_counter() - t0
    cert = res.best_certificate
    p = min(cert.P1[0, 0], cert.P2[0, 0])
    half = 1 / np.sqrt(p)
    ok = (0.95 <= cert.P1[0, 0] <= 1.0 and 0.95 <= cert.P2[0, 0] <= 1.0
          and 0.8 <= res.best_alpha <= 1.2 and 1.0 <= half <= 1.05 and elapsed < 5)
    verdict(capsys, 1, ok, f"p={p:.6f} alpha={res.best_alpha:.4f} half-width={half:.5f} "
                           f"time={elapsed:.2f}s")


def test_criterion_2_example1_reproduction(capsys, ex1):
    t0 = time.perf_counter()
    certs = _fresh(ex1, 0.4)
    trajs = simulate_many(ex1, 1000, seed=0, t_end=30.0, record_every=10)
    sets = {k: PiecewiseEllipsoid.from_certificate(c, ex1) for k, c in certs.items()}
    inside = {k: containment_audit(trajs, s).inside_fraction for k, s in sets.items()}
    area_pw, area_common = monte_carlo_areas([sets[PIECEWISE], sets[COMMON]], samples=100_000)
    elapsed = time.perf_counter() - t0
    ok = (inside[PIECEWISE] == 1.0 and inside[COMMON] == 1.0 and area_pw <= area_common
          and elapsed < 60)
    verdict(capsys, 2, ok, f"inside={inside} area piecewise={area_pw:.4f} "
                           f"common={area_common:.4f} time={elapsed:.1f}s")


def test_criterion_3_printed_certificate_audit(capsys, ex2):
    pr = io.printed_example2()
    deficits = given_pieces_deficits(ex2, pr["P"], pr["P1"], pr["P2"], pr["alpha"])
    worst = max(v for k, v in deficits.items() if "lmi" in k)
    l1 = np.linalg.eigvalsh(pr["P1"] - pr["P"]).min()
    l2 = np.linalg.eigvalsh(pr["P2"] - pr["P"]).min()
    ok = worst <= 5e-3 and l1 > 0 and l2 > 0
    verdict(capsys, 3, ok, f"max PSD deficit={worst:.3e} min eig(P1-P)={l1:.3e} "
                           f"min eig(P2-P)={l2:.3e}")


def test_criterion_4_example2_fresh_solve(capsys, ex2):
    t0 = time.perf_counter()
    certs = _fresh(ex2, 0.1)
    elapsed = time.perf_counter() - t0
    tr_pw = np.trace(certs[PIECEWISE].P1) + np.trace(certs[PIECEWISE].P2)
    tr_common = np.trace(certs[COMMON].P)
    ok = tr_pw >= 2 * tr_common - 1e-6 and elapsed < 10
    verdict(capsys, 4, ok, f"trace(P1)+trace(P2)={tr_pw:.4f} 2*trace(P)={2 * tr_common:.4f} "
                           f"time={elapsed:.2f}s")


@pytest.fixture(scope="module")
def audited(ex1, ex2):
    out = {}
    for name, sys, alpha in (("example1", ex1, 0.4), ("example2", ex2, 0.1)):
        cert = _fresh(sys, alpha)[PIECEWISE]
        out[name] = (sys, cert, simulate_many(sys, 100, seed=0, t_end=30.0))
    return out


def test_criterion_5_lyapunov_audit(capsys, audited):
    fractions = {k: _violation_fraction(tr, cert, sys) for k, (sys, cert, tr) in audited.items()}
    ok = all(v == 0.0 for v in fractions.values())
    verdict(capsys, "5 (fresh certificates)", ok, f"violation_fraction={fractions}")


def test_criterion_5_control_p1_over_10(capsys, audited):
    fractions = {k: _violation_fraction(tr, cert.scaled_pieces(0.1, 1.0), sys)
                 for k, (sys, cert, tr) in audited.items()}
    ok = all(v > 0 for v in fractions.values())
    verdict(capsys, "5 (control P1/10)", ok, f"violation_fraction={fractions}")


def test_criterion_5_supplementary_control_p1_times_10(capsys, audited):
    fractions = {k: _violation_fraction(tr, cert.scaled_pieces(10.0, 1.0), sys)
                 for k, (sys, cert, tr) in audited.items()}
    ok = all(v > 0 for v in fractions.values())
    verdict(capsys, "5 (supplementary control P1*10)", ok, f"violation_fraction={fractions}")


def test_criterion_6a_copositivity_soundness(capsys):
    rng = np.random.default_rng(6)
    worst, found, tried = np.inf, 0, 0
    while found < 200:
        tried += 1
        k = int(rng.integers(2, 9))
        G = rng.standard_normal((k, int(rng.integers(1, k + 1))))
        N = np.abs(rng.standard_normal((k, k))) * (rng.random((k, k)) < 0.5)
        M = G @ G.T + N + N.T - rng.uniform(0, 0.5) * np.eye(k)
        cert = copositive_certificate(M)
        if cert is None or not cert.check():
            continue
        found += 1
        worst = min(worst, verify_copositive_sampled(M, 10_000, rng))
    ok = worst >= -1e-9
    verdict(capsys, "6a", ok, f"{found} certificates ({tried} tried), "
                              f"sampled orthant minimum={worst:.3e}")


def test_criterion_6b_hyperplane_continuity(capsys):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        c = rng.standard_normal(n)
        f = rng.standard_normal()
        g = build_geometry(c, f)
        L = hyperplane_equality_map(g)
        _, _, vt = np.linalg.svd(L)
        null = vt[np.linalg.matrix_rank(L):]
        dP, db, de = unpack_difference(null.T @ rng.standard_normal(null.shape[0]), n)
        q2 = QuadraticForm(random_spd(rng, n), rng.standard_normal(n), rng.standard_normal())
        q1 = QuadraticForm(q2.P + dP, q2.b + db, q2.e + de)
        theta = rng.standard_normal((10_000, n - 1)) * 10
        x = g.r0 + theta @ g.Rhat.T
        ratio = np.abs(q1(x) - q2(x)) / (1 + np.sum(x * x, axis=1))
        worst = max(worst, float(ratio.max()))
    ok = worst <= 1e-9
    verdict(capsys, "6b", ok, f"max |q1-q2|/(1+|x|^2) on the hyperplane={worst:.3e}")


def test_criterion_6c_halfspace_decomposition(capsys):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        c = rng.standard_normal(n)
        f = rng.standard_normal()
        g = build_geometry(c, f)
        x = rng.standard_normal(n) * 5
        s = c @ x + f
        if s < 0:
            x = x - 2 * s / (c @ c) * c
        basis = np.hstack([c[:, None], g.Rhat, -g.Rhat])
        coef, _ = nnls(basis, x - g.r0)
        assert np.all(coef >= 0)
        worst = max(worst, float(np.linalg.norm(g.r0 + basis @ coef - x)))
    ok = worst <= 1e-9
    verdict(capsys, "6c", ok, f"max decomposition residual={worst:.3e}")


def test_criterion_7_rk4_order(capsys):
    sys = scalar_system()
    pol = DisturbancePolicy.constant([1.0])
    err = [abs(integrate(sys, [0.0], pol, 5.0, dt).states[-1, 0] - (1 - np.exp(-5.0)))
           for dt in (0.2, 0.1)]
    ratio = err[0] / err[1]
    verdict(capsys, 7, 12 <= ratio <= 20, f"error ratio={ratio:.3f}")


def test_criterion_8_projection_oracle(capsys):
    rng = np.random.default_rng(9)
    worst_contain, worst_gap = 0.0, 0.0
    for _ in range(50):
        q = QuadraticForm(random_spd(rng, 4), rng.standard_normal(4), -rng.uniform(0, 1))
        coords = list(rng.choice(4, 2, replace=False))
        ell = project_2d(q, coords)
        center, level = q.center(), 1 - q.min_value()
        u = rng.standard_normal((10_000, 4))
        r = np.sqrt(level / np.einsum("ki,ij,kj->k", u, q.P, u))
        y = (center + r[:, None] * u)[:, coords]
        worst_contain = max(worst_contain, float(np.max(ell(y)) / ell.level - 1))
        # boundary points whose outward normal lies in the projection plane
        g = np.zeros((1000, 4))
        g[:, coords] = rng.standard_normal((1000, 2))
        v = np.linalg.solve(q.P, g.T).T
        touch = center + v * np.sqrt(level / np.einsum("ki,ki->k", v, g))[:, None]
        worst_gap = max(worst_gap, float(ell.level - np.max(ell(touch[:, coords]))))
    ok = worst_contain <= 1e-9 and worst_gap <= 1e-3
    verdict(capsys, 8, ok, f"max relative containment excess={worst_contain:.3e} "
                           f"max tightness gap={worst_gap:.3e}")

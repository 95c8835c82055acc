import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from pwa_reach.errors import NonFiniteState
from pwa_reach.model import BimodalSystem
from pwa_reach.reachset import PiecewiseEllipsoid
from pwa_reach.sim import (DisturbanceKind, DisturbancePolicy, containment_audit, integrate,
                           integrate_batch, lyapunov_audit, sample_disturbance, simulate_many)
from pwa_reach.solve import PIECEWISE, Certificate

from conftest import random_spd, scalar_system

CONST_ONE = DisturbancePolicy.constant([1.0])


def test_equilibrium_stays_put(ex1):
    tr = integrate(ex1, np.zeros(2), DisturbancePolicy.constant([0.0]), 2.0, 1e-2)
    assert np.all(tr.states == 0.0)


def test_scalar_closed_form():
    tr = integrate(scalar_system(), [0.0], CONST_ONE, 5.0, 1e-3)
    np.testing.assert_allclose(tr.states[:, 0], 1 - np.exp(-tr.times), atol=1e-12)
    assert tr.states.max() < 1.0


def _rk4_error(dt):
    tr = integrate(scalar_system(), [0.0], CONST_ONE, 5.0, dt)
    return abs(tr.states[-1, 0] - (1 - np.exp(-5.0)))


def test_rk4_order():
    ratio = _rk4_error(0.2) / _rk4_error(0.1)
    assert 12 <= ratio <= 20


def test_ball_sampling_scalar_uniform():
    rng = np.random.default_rng(0)
    w = sample_disturbance(DisturbancePolicy(), [[1.0]], rng, size=20_000)[:, 0]
    assert w.min() >= -1 and w.max() <= 1
    assert stats.kstest(w, stats.uniform(loc=-1, scale=2).cdf).pvalue > 1e-3


def test_ball_sampling_scaled_and_extremal():
    rng = np.random.default_rng(1)
    w = sample_disturbance(DisturbancePolicy(), [[4.0]], rng, size=5000)
    assert np.abs(w).max() <= 0.5 and np.abs(w).max() > 0.49
    ext = sample_disturbance(DisturbancePolicy(DisturbanceKind.EXTREMAL_RANDOM_SIGN), [[1.0]],
                             rng, size=1000)
    assert set(np.unique(ext)) == {-1.0, 1.0}


def test_constant_disturbance_must_be_admissible():
    with pytest.raises(ValueError):
        sample_disturbance(DisturbancePolicy.constant([2.0]), [[1.0]])


@settings(max_examples=20, deadline=None)
@given(m=st.integers(1, 4), seed=st.integers(0, 2**16))
def test_disturbance_admissibility(m, seed):
    rng = np.random.default_rng(seed)
    Rw = random_spd(rng, m, 0.1)
    for kind in (DisturbanceKind.PIECEWISE_CONSTANT_RANDOM, DisturbanceKind.EXTREMAL_RANDOM_SIGN):
        w = sample_disturbance(DisturbancePolicy(kind), Rw, rng, size=2000)
        assert np.all(np.einsum("ki,ij,kj->k", w, Rw, w) <= 1 + 1e-12)


def test_holds_disturbance_per_window(ex1):
    tr = integrate(ex1, np.zeros(2), DisturbancePolicy(seed=3, hold_dt=0.05), 1.0, 1e-2)
    w = tr.w_values[:-1, 0]
    assert np.all(w.reshape(20, 5) == w.reshape(20, 5)[:, :1])
    assert len(np.unique(w)) == 20


def test_mode_trace_consistency(ex1):
    tr = simulate_many(ex1, 5, t_end=10.0, dt=1e-2, kind=DisturbanceKind.EXTREMAL_RANDOM_SIGN)
    for t in tr:
        s = t.states @ ex1.c + ex1.f
        clear = np.abs(s) > 1e-12
        expected = np.where(s >= 0, "POS", "NEG")
        assert np.all(t.mode_trace[clear] == expected[clear])


def test_reproducible(ex1):
    a = simulate_many(ex1, 3, seed=7, t_end=2.0)
    b = simulate_many(ex1, 3, seed=7, t_end=2.0)
    for x, y in zip(a, b):
        assert np.array_equal(x.states, y.states)
    c = simulate_many(ex1, 3, seed=8, t_end=2.0)
    assert not np.array_equal(a[0].states, c[0].states)
    # trajectory k uses seed + k regardless of batching
    d = simulate_many(ex1, 3, seed=7, t_end=2.0, batch=1)
    assert np.array_equal(a[2].states, d[2].states)


def test_non_finite_state_raises():
    sys = scalar_system(a=60.0)
    with pytest.raises(NonFiniteState):
        integrate(sys, [1.0], CONST_ONE, 30.0, 1e-2)


def test_rejects_bad_step():
    with pytest.raises(ValueError):
        integrate(scalar_system(), [0.0], CONST_ONE, 1.0, 0.0)


def test_csv(tmp_path, ex1):
    tr = integrate(ex1, np.zeros(2), DisturbancePolicy(seed=0), 0.1, 1e-2)
    tr.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,w1,mode"
    assert len(lines) == len(tr) + 1


def test_scalar_lyapunov_oracle():
    sys = scalar_system()
    one = np.array([[1.0]])
    cert = Certificate(PIECEWISE, 1.0, one, one, np.zeros(1), np.zeros(1))
    tr = integrate(sys, [0.0], CONST_ONE, 10.0, 1e-3)
    rep = lyapunov_audit(tr, cert, sys)
    assert rep.violation_fraction == 0.0 and rep.points == len(tr)


def test_example1_lyapunov_audit(ex1, ex1_certs):
    trajs = simulate_many(ex1, 20, t_end=10.0, record_every=5)
    cert = ex1_certs[PIECEWISE]
    assert all(lyapunov_audit(t, cert, ex1).violation_fraction == 0.0 for t in trajs)


def _violations(trajs, cert, sys):
    reps = [lyapunov_audit(t, cert, sys) for t in trajs]
    return sum(r.violation_fraction * r.points for r in reps) / sum(r.points for r in reps)


def test_corrupted_certificate_shrunk_tenfold_is_caught(ex1, ex1_certs):
    """Documented falsification control: P1 / 10."""
    trajs = simulate_many(ex1, 20, t_end=10.0, record_every=5)
    bad = ex1_certs[PIECEWISE].scaled_pieces(0.1, 1.0)
    assert _violations(trajs, bad, ex1) > 0


def test_corrupted_certificate_grown_tenfold_is_caught(ex1, ex1_certs):
    trajs = simulate_many(ex1, 20, t_end=10.0, record_every=5)
    bad = ex1_certs[PIECEWISE].scaled_pieces(10.0, 1.0)
    assert _violations(trajs, bad, ex1) > 0


def test_containment(ex1, ex1_certs):
    pset = PiecewiseEllipsoid.from_certificate(ex1_certs[PIECEWISE], ex1)
    trajs = simulate_many(ex1, 50, t_end=10.0, record_every=10)
    assert containment_audit(trajs, pset).inside_fraction == 1.0
    # worst-case constant inputs drive the state close to the boundary
    hard = integrate_batch(ex1, np.zeros((2, 2)), [CONST_ONE, DisturbancePolicy.constant([-1.0])],
                           30.0, 1e-2)
    assert containment_audit(hard, pset).inside_fraction == 1.0
    shrunk = PiecewiseEllipsoid(*(q.scaled(4.0) for q in (pset.neg_piece, pset.pos_piece)),
                                pset.c, pset.f)
    assert containment_audit(hard, shrunk).inside_fraction < 1.0


def test_containment_empty_convention(ex1, ex1_certs):
    pset = PiecewiseEllipsoid.from_certificate(ex1_certs[PIECEWISE], ex1)
    rep = containment_audit([], pset)
    assert rep.inside_fraction == 1.0 and rep.worst_excess == -np.inf


def test_batch_shares_hold_dt(ex1):
    with pytest.raises(ValueError):
        integrate_batch(ex1, np.zeros((2, 2)), [DisturbancePolicy(hold_dt=0.01),
                                                DisturbancePolicy(hold_dt=0.02)], 1.0, 1e-2)

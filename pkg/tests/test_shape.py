import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from memwalk.kernels import Exponential
from memwalk.sampler import MemorySet, RngStream, sample_memory_set
from memwalk.shape import (
    GyrationTensor,
    TensorBatch,
    align_for_density,
    asphericity_estimate,
    eigen_decomposition,
    ellipse,
    gyration_tensor,
)


def _mem(xy):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    return MemorySet(times=np.arange(1, len(xy) + 1, dtype=float), locations=xy)


def _rotate(xy, phi):
    c, s = math.cos(phi), math.sin(phi)
    return xy @ np.array([[c, -s], [s, c]]).T


def _tensor_of(xy):
    g = gyration_tensor(_mem(xy))
    return np.array([[g.t11, g.t12], [g.t12, g.t22]])


# -- gyration tensor --------------------------------------------------------

def test_empty_set():
    g = gyration_tensor(_mem(np.empty((0, 2))))
    assert (g.t11, g.t12, g.t22, g.n_points) == (0.0, 0.0, 0.0, 0)


def test_single_point():
    g = gyration_tensor(_mem([[1.0, 0.0]]))
    assert (g.t11, g.t12, g.t22, g.n_points) == (0.5, 0.0, 0.0, 1)


def test_matches_double_loop():
    xy = np.random.default_rng(0).normal(size=(100, 2))
    g = gyration_tensor(_mem(xy))
    sums = [[0.0, 0.0], [0.0, 0.0]]
    for p in xy:
        for i in range(2):
            for j in range(2):
                sums[i][j] += p[i] * p[j]
    n1 = 101.0
    assert g.t11 == pytest.approx(sums[0][0] / n1, rel=1e-14)
    assert g.t12 == pytest.approx(sums[0][1] / n1, rel=1e-13)
    assert g.t22 == pytest.approx(sums[1][1] / n1, rel=1e-14)


def test_positive_semidefinite_on_samples():
    for i in range(200):
        g = gyration_tensor(sample_memory_set(Exponential(), 30.0, RngStream(2, i)))
        assert g.t11 >= 0.0 and g.t22 >= 0.0
        assert g.det >= -1e-12 * g.trace ** 2


# -- eigen decomposition ----------------------------------------------------

def test_eigen_examples():
    assert eigen_decomposition(GyrationTensor(0.5, 0.0, 0.0)) == (0.5, 0.0, 0.0)
    assert eigen_decomposition(GyrationTensor(1.0, 0.0, 1.0)) == (1.0, 1.0, 0.0)
    l1, l2, _ = eigen_decomposition(GyrationTensor(2.0, 1.0, 1.0))
    assert l1 == pytest.approx((3 + math.sqrt(5)) / 2, rel=1e-15)
    assert l2 == pytest.approx((3 - math.sqrt(5)) / 2, rel=1e-15)


def test_eigen_angle_points_along_major_axis():
    for theta in np.linspace(0.0, math.pi, 13, endpoint=False):
        u = np.array([math.cos(theta), math.sin(theta)])
        T = 3.0 * np.outer(u, u) + 0.5 * np.eye(2)
        l1, l2, th = eigen_decomposition(GyrationTensor(T[0, 0], T[0, 1], T[1, 1]))
        assert l1 == pytest.approx(3.5) and l2 == pytest.approx(0.5)
        assert 0.0 <= th < math.pi
        assert min(abs(th - theta), math.pi - abs(th - theta)) < 1e-12


@settings(max_examples=500, deadline=None)
@given(
    t11=st.floats(0.0, 1e3),
    t22=st.floats(0.0, 1e3),
    rho=st.floats(-1.0, 1.0),
)
def test_trace_and_det_consistency(t11, t22, rho):
    t12 = rho * math.sqrt(t11 * t22)
    T = GyrationTensor(t11, t12, t22)
    l1, l2, th = eigen_decomposition(T)
    assert l1 >= l2
    assert 0.0 <= th < math.pi
    assert l1 + l2 == pytest.approx(T.trace, rel=1e-12, abs=1e-300)
    if l1 > 0:
        assert l1 * l2 == pytest.approx(T.det, rel=1e-12, abs=1e-12 * T.trace ** 2)


# -- ellipse ----------------------------------------------------------------

def test_ellipse_examples():
    e = ellipse(GyrationTensor(1.0, 0.0, 0.25), kappa=2.0)
    assert (e.semi_major, e.semi_minor, e.angle_theta) == (2.0, 1.0, 0.0)
    z = ellipse(GyrationTensor(0.0, 0.0, 0.0), kappa=1.0)
    assert (z.semi_major, z.semi_minor) == (0.0, 0.0)
    with pytest.raises(ValueError):
        ellipse(GyrationTensor(1.0, 0.0, 1.0), kappa=0.0)


def test_ellipse_axes_ordered():
    for i in range(100):
        g = gyration_tensor(sample_memory_set(Exponential(), 20.0, RngStream(8, i)))
        e = ellipse(g)
        assert e.semi_major >= e.semi_minor >= 0.0


def test_ellipse_coverage():
    cover = []
    for i in range(1000):
        mem = sample_memory_set(Exponential(), 200.0, RngStream(3, i))
        if len(mem) < 2:
            continue
        g = gyration_tensor(mem)
        T = np.array([[g.t11, g.t12], [g.t12, g.t22]])
        pts = np.vstack([np.zeros((1, 2)), mem.locations])
        quad_form = np.einsum("ij,jk,ik->i", pts, np.linalg.inv(T), pts)
        cover.append(np.mean(quad_form <= 4.0))
    assert np.mean(cover) >= 0.80


# -- estimator --------------------------------------------------------------

def test_collinear_replicas_give_one():
    rng = np.random.default_rng(1)
    tensors = []
    for _ in range(50):
        u = rng.normal(size=2)
        s = rng.uniform(0.1, 5.0)
        tensors.append(GyrationTensor(s * u[0] ** 2, s * u[0] * u[1], s * u[1] ** 2, 3))
    assert asphericity_estimate(tensors).a2_hat == pytest.approx(1.0, abs=1e-12)


def test_isotropic_replicas_give_zero():
    est = asphericity_estimate([GyrationTensor(s, 0.0, s, 4) for s in (0.5, 1.0, 7.0)])
    assert est.a2_hat == 0.0
    assert est.stderr == 0.0


def test_estimator_fields():
    batch = TensorBatch(np.array([1.0, 2.0]), np.array([0.0, 0.5]), np.array([0.0, 1.0]), np.array([1, 2]))
    est = asphericity_estimate(batch)
    num = np.array([1.0, 1.0 + 1.0])
    den = np.array([1.0, 9.0])
    assert est.mean_num == pytest.approx(num.mean())
    assert est.mean_den == pytest.approx(den.mean())
    assert est.a2_hat == pytest.approx(est.mean_num / est.mean_den)
    assert est.replicas == 2


def test_estimator_errors():
    with pytest.raises(ValueError):
        asphericity_estimate([])
    with pytest.raises(ValueError):
        asphericity_estimate([GyrationTensor(0.0, 0.0, 0.0)])


def test_jackknife_agrees_with_delta_method():
    tensors = [gyration_tensor(sample_memory_set(Exponential(), 50.0, RngStream(6, i))) for i in range(3000)]
    delta = asphericity_estimate(tensors)
    jack = asphericity_estimate(tensors, jackknife=True)
    assert jack.a2_hat == delta.a2_hat
    assert jack.stderr == pytest.approx(delta.stderr, rel=0.05)


def test_jackknife_matches_explicit_leave_one_out():
    rng = np.random.default_rng(4)
    t = rng.uniform(0.1, 2.0, size=(30, 3))
    t[:, 1] *= 0.3
    batch = TensorBatch(t[:, 0], t[:, 1], t[:, 2], np.ones(30, dtype=int))
    loo = []
    for i in range(30):
        keep = np.arange(30) != i
        sub = TensorBatch(t[keep, 0], t[keep, 1], t[keep, 2], np.ones(29, dtype=int))
        loo.append(asphericity_estimate(sub).a2_hat)
    loo = np.array(loo)
    expected = math.sqrt(29 / 30 * np.sum((loo - loo.mean()) ** 2))
    assert asphericity_estimate(batch, jackknife=True).stderr == pytest.approx(expected, rel=1e-10)


def test_estimator_scale_invariant():
    batch = TensorBatch.from_tensors(
        gyration_tensor(sample_memory_set(Exponential(), 40.0, RngStream(9, i))) for i in range(500)
    )
    base = asphericity_estimate(batch).a2_hat
    for s in (1e-3, 0.5, 3.0, 1e4):
        assert asphericity_estimate(batch.scaled(s)).a2_hat == pytest.approx(base, abs=1e-12)


# -- invariance properties --------------------------------------------------

# magnitudes kept well above the range where squares underflow
coords = st.one_of(st.just(0.0), st.floats(1e-60, 100.0), st.floats(-100.0, -1e-60))
point_clouds = hnp.arrays(np.float64, st.tuples(st.integers(1, 40), st.just(2)), elements=coords)


@settings(max_examples=1500, deadline=None)
@given(xy=point_clouds, phi=st.floats(-10.0, 10.0))
def test_rotation_invariance(xy, phi):
    a = np.linalg.eigvalsh(_tensor_of(xy))
    l1, l2, _ = eigen_decomposition(gyration_tensor(_mem(_rotate(xy, phi))))
    scale = max(a[1], 1e-300)
    assert abs(l1 - a[1]) <= 1e-10 * scale
    assert abs(l2 - a[0]) <= 1e-10 * scale


@settings(max_examples=1500, deadline=None)
@given(xy=point_clouds, s=st.floats(1e-3, 1e3))
def test_scale_equivariance(xy, s):
    l1, l2, _ = eigen_decomposition(gyration_tensor(_mem(xy)))
    m1, m2, _ = eigen_decomposition(gyration_tensor(_mem(s * xy)))
    assert m1 == pytest.approx(s * s * l1, rel=1e-12, abs=1e-300)
    assert m2 == pytest.approx(s * s * l2, rel=1e-9, abs=1e-10 * s * s * l1)


# -- alignment --------------------------------------------------------------

def test_aligned_input_is_unchanged():
    xy = np.array([[1.0, 0.2], [1.0, -0.2], [3.0, 0.3], [3.0, -0.3]])
    out = align_for_density(_mem(xy))
    g = gyration_tensor(_mem(xy))
    assert g.t12 == 0.0
    np.testing.assert_allclose(out[0], [0.0, 0.0])
    np.testing.assert_allclose(out[1:], xy, atol=1e-12)


def test_alignment_requires_two_points():
    with pytest.raises(ValueError):
        align_for_density(_mem([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        align_for_density(_mem(np.empty((0, 2))))


def test_alignment_properties():
    for i in range(200):
        mem = sample_memory_set(Exponential(), 30.0, RngStream(12, i))
        if len(mem) < 2:
            continue
        out = align_for_density(mem)
        assert out.shape == (len(mem) + 1, 2)
        assert np.all(out[0] == 0.0)
        g = gyration_tensor(_mem(out[1:]))
        assert abs(g.t12) <= 1e-10 * max(g.trace, 1e-300)
        assert g.t11 >= g.t22 - 1e-12 * g.trace
        assert out[:, 0].sum() >= 0.0


def test_mirror_property():
    rng = np.random.default_rng(5)
    for _ in range(10):
        xy = np.cumsum(rng.normal(size=(25, 2)), axis=0)
        a = align_for_density(_mem(xy))
        b = align_for_density(_mem(xy * [-1.0, 1.0]))
        np.testing.assert_allclose(b[:, 0], a[:, 0], atol=1e-10)
        np.testing.assert_allclose(np.abs(b[:, 1]), np.abs(a[:, 1]), atol=1e-10)
        same = np.allclose(b[:, 1], a[:, 1], atol=1e-10)
        flipped = np.allclose(b[:, 1], -a[:, 1], atol=1e-10)
        assert same or flipped

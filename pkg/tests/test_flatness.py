import numpy as np
import pytest

from flatlab.catalog import custom_connection_3d, random_spd_metric, riccati_soliton, unit_box
from flatlab.curvature import curvature_bundle, riemann_mixed
from flatlab.errors import NotPositiveDefinite
from flatlab.fields import ChartBox, ConnectionJet1, FieldSpec, eval_connection_jet1, eval_metric_jet2
from flatlab.flatness import (
    CurvaturePrescription,
    classify_flatness,
    cone_condition,
    constant_connection_curvature,
    flatness_condition_residuals,
    gray_volume_check,
    integrability_check,
    monotone_chain_holds,
    normal_metric_from_curvature,
    project_curvature,
    ricci_direct_trace,
    ricci_trace_of_P,
    riccati_implies_flat,
    riccati_perturbation_residual,
    riccati_residual_minus,
    riccati_residual_plus,
    sample_points,
)

from conftest import sphere_spec

LINE = ChartBox((0.0,), (1.0,), (8,))
SQUARE = ChartBox.cube(2, 0.0, 1.0, 8)


def zero_jet(n, pts=1):
    return ConnectionJet1(np.zeros((pts, n)), np.zeros((pts, n, n, n)), np.zeros((pts, n, n, n, n)))


def const_jet(C):
    n = C.shape[0]
    return ConnectionJet1(np.zeros(n), C, np.zeros((n,) * 4))


def test_classify_constant_metric_all_flat():
    spec = FieldSpec("euclidean", {"c": [[2.0, 0.5], [0.5, 1.0]]}, ChartBox.cube(2))
    rep = classify_flatness(spec, sample_points(spec.box, 8))
    assert rep.connection_flat and rep.curvature_flat and rep.ricci_flat and rep.scalar_flat


def test_classify_sphere_nothing_flat():
    rep = classify_flatness(sphere_spec(), sample_points(sphere_spec().box, 8))
    assert not (rep.connection_flat or rep.curvature_flat or rep.ricci_flat or rep.scalar_flat)
    assert rep.max_residuals["scalar"] == pytest.approx(2.0)
    assert rep.points_checked == 8


def test_classify_1d_soliton_curvature_flat_only():
    spec = riccati_soliton(LINE, [1.0])
    rep = classify_flatness(spec, sample_points(LINE, 8))
    assert not rep.connection_flat and rep.curvature_flat


def test_monotone_chain_over_catalog():
    box = unit_box(3, 6)
    specs = [random_spd_metric(s, 2, box) for s in range(4)] + [sphere_spec(), custom_connection_3d(box)]
    reports = [classify_flatness(s, sample_points(s.box, 6)) for s in specs]
    assert monotone_chain_holds(reports)


def test_riccati_residual_examples():
    assert not riccati_residual_plus(zero_jet(2)).any()
    assert not riccati_residual_minus(zero_jet(2)).any()
    c = 2.0
    x = np.array([0.3])
    plus = eval_connection_jet1(riccati_soliton(LINE, [1.0], c), x)
    assert plus.Gamma[0, 0, 0] == pytest.approx(1 / (0.3 + c))
    assert np.max(np.abs(riccati_residual_plus(plus))) < 1e-15
    minus = eval_connection_jet1(riccati_soliton(LINE, [-1.0], c), x)
    assert minus.Gamma[0, 0, 0] == pytest.approx(-1 / (0.3 + c))
    assert np.max(np.abs(riccati_residual_minus(minus))) < 1e-15
    C = np.zeros((2, 2, 2))
    C[0, 0, 0] = 1.0
    assert np.max(np.abs(riccati_residual_plus(const_jet(C)))) == pytest.approx(1.0)
    assert np.max(np.abs(riccati_residual_minus(const_jet(C)))) == pytest.approx(1.0)


@pytest.mark.parametrize("which,u", [("plus", [0.3, 0.7]), ("minus", [-0.4, -0.6])])
def test_soliton_family_n2_is_flat(which, u):
    spec = riccati_soliton(SQUARE, u)
    X = sample_points(SQUARE, 20, 0)
    chk = riccati_implies_flat(eval_connection_jet1(spec, X), which)
    assert chk.riccati_norm < 1e-8 and chk.curvature_norm < 1e-8
    assert integrability_check(spec, which, X) < 1e-6


def test_riccati_zero_and_control():
    assert riccati_implies_flat(zero_jet(3)) == (0.0, 0.0)
    spec = custom_connection_3d(unit_box(3))
    chk = riccati_implies_flat(eval_connection_jet1(spec, sample_points(spec.box, 5)))
    assert chk.riccati_norm > 1e-2


def test_perturbation_residual():
    X = sample_points(LINE, 6, 0)
    a = eval_connection_jet1(riccati_soliton(LINE, [1.0], 2.0), X)
    b = eval_connection_jet1(riccati_soliton(LINE, [1.0], 3.5), X)
    T = ConnectionJet1(X, b.Gamma - a.Gamma, b.dGamma - a.dGamma)
    assert np.max(np.abs(riccati_perturbation_residual(a, T))) < 1e-8
    assert not riccati_perturbation_residual(a, zero_jet(1, 6)._replace(x=X)).any()
    C = np.zeros((2, 2, 2))
    C[0, 0, 0] = 2.0
    res = riccati_perturbation_residual(const_jet(np.zeros((2, 2, 2))), const_jet(C))
    assert np.allclose(res, np.einsum("lpn,nis->plis", C, C))


def test_integrability_zero_and_1d():
    zero = FieldSpec("tabulated_connection", {"C": np.zeros((2, 2, 2)).tolist()}, SQUARE)
    assert integrability_check(zero, "plus", sample_points(SQUARE, 5)) == 0.0
    assert integrability_check(riccati_soliton(LINE, [1.0]), "plus", sample_points(LINE, 5)) < 1e-6


def test_cone_condition_examples():
    assert cone_condition(np.zeros((2, 2, 2))) == 0.0
    C = np.zeros((2, 2, 2))
    C[0, 1, 1] = 1.0
    assert cone_condition(C) == 0.0
    assert not constant_connection_curvature(C).any()
    C = np.zeros((2, 2, 2))
    C[0, 0, 0] = 1.0
    assert cone_condition(C) == 1.0


def test_trace_factorization(rng):
    for _ in range(30):
        G = rng.normal(size=(3, 3, 3))
        G = 0.5 * (G + np.swapaxes(G, 1, 2))
        dG = rng.normal(size=(3,) * 4)
        dG = 0.5 * (dG + np.swapaxes(dG, 2, 3))
        cj = ConnectionJet1(np.zeros(3), G, dG)
        direct = np.einsum("lilk->ik", riemann_mixed(cj))
        for which in ("plus", "minus"):
            assert np.max(np.abs(ricci_trace_of_P(cj, which) - direct)) < 1e-12
            assert np.max(np.abs(ricci_direct_trace(cj, which) - direct)) < 1e-12


def test_flatness_condition_residuals_on_soliton():
    cj = eval_connection_jet1(riccati_soliton(SQUARE, [0.5, 0.5]), sample_points(SQUARE, 4))
    r = flatness_condition_residuals(cj)
    assert r["curvature"] < 1e-12 and r["riccati_plus"] < 1e-12 and r["vanishing_jet"] > 1e-2


def test_projection_idempotent(rng):
    X = rng.normal(size=(3,) * 4)
    P1 = project_curvature(X)
    assert np.max(np.abs(project_curvature(P1) - P1)) < 1e-14


def test_normal_metric_zero_curvature_is_euclidean():
    spec = normal_metric_from_curvature(CurvaturePrescription(2, np.zeros((2,) * 4)), unit_box(2))
    jet = eval_metric_jet2(spec, sample_points(spec.box, 4))
    assert np.allclose(jet.g, np.eye(2)) and not jet.dg.any()


def test_normal_metric_origin_data_and_curvature():
    p = CurvaturePrescription.constant_curvature_2d(1.0)
    spec = normal_metric_from_curvature(p, unit_box(2))
    jet = eval_metric_jet2(spec, np.zeros(2))
    assert np.array_equal(jet.g, np.eye(2)) and not jet.dg.any()
    assert np.max(np.abs(curvature_bundle(jet).Rlower - p.R0)) < 5e-4


def test_normal_metric_random_3d():
    p = CurvaturePrescription.random(4, 3, 0.1)
    assert np.max(np.abs(p.R0)) == pytest.approx(0.1)
    spec = normal_metric_from_curvature(p, unit_box(3))
    got = curvature_bundle(eval_metric_jet2(spec, np.zeros(3))).Rlower
    assert np.max(np.abs(got - p.R0)) < 5e-4


def test_normal_metric_box_too_large():
    p = CurvaturePrescription.constant_curvature_2d(1.0)
    with pytest.raises(NotPositiveDefinite):
        normal_metric_from_curvature(p, ChartBox.cube(2, -3.0, 3.0))


def test_gray_volume_examples():
    flat = normal_metric_from_curvature(CurvaturePrescription(2, np.zeros((2,) * 4)), unit_box(2))
    assert gray_volume_check(flat, 0.1) == 0.0
    p = CurvaturePrescription.constant_curvature_2d(1.0)
    spec = normal_metric_from_curvature(p, unit_box(2))
    e1 = gray_volume_check(spec, 0.1, p.ricci)
    e2 = gray_volume_check(spec, 0.05, p.ricci)
    assert e1 < 2e-3 and e1 / e2 >= 8.0
    p3 = CurvaturePrescription.random(1, 3, 0.1)
    s3 = normal_metric_from_curvature(p3, unit_box(3))
    assert gray_volume_check(s3, 0.05, p3.ricci) / gray_volume_check(s3, 0.025, p3.ricci) >= 6.0

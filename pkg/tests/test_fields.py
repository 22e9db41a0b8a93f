import numpy as np
import pytest

from flatlab.errors import ConfigInvalid, NotPositiveDefinite, OutOfDomain
from flatlab.fields import (
    ChartBox,
    FDConfig,
    FieldSpec,
    eval_connection_jet1,
    eval_metric_jet2,
    random_spd_metric,
)
from flatlab.flatness import sample_points
from flatlab.tensor_core import leading_minors

from conftest import sphere_spec


def conformal_1_plus_x1sq():
    scalar = {"id": "quadratic", "c0": 1.0, "a": [0.0, 0.0], "Q": [[1.0, 0.0], [0.0, 0.0]]}
    return FieldSpec("conformal", {"scalar": scalar}, ChartBox.cube(2, -2.0, 2.0))


def test_box_validation():
    with pytest.raises(ConfigInvalid):
        ChartBox((0.0,), (0.0,), (4,))
    with pytest.raises(ConfigInvalid):
        ChartBox((0.0,), (1.0,), (1,))
    box = ChartBox.cube(2)
    assert ChartBox.from_dict(box.to_dict()) == box


def test_fieldspec_roundtrip_and_unknown_keys():
    spec = sphere_spec()
    assert FieldSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ConfigInvalid):
        FieldSpec.from_dict({**spec.to_dict(), "colour": 1})


def test_euclidean_jet():
    spec = FieldSpec("euclidean", {}, ChartBox.cube(3))
    jet = eval_metric_jet2(spec, np.array([0.1, 0.2, -0.3]))
    assert np.array_equal(jet.g, np.eye(3))
    assert not jet.dg.any() and not jet.ddg.any()


def test_conformal_example_analytic_and_fd():
    spec = conformal_1_plus_x1sq()
    x = np.array([1.0, 0.0])
    jet = eval_metric_jet2(spec, x)
    assert np.allclose(jet.g, 2 * np.eye(2))
    assert jet.dg[0, 0, 0] == pytest.approx(2.0)
    fdj = eval_metric_jet2(spec, x, method="fd")
    assert np.max(np.abs(fdj.dg - jet.dg)) < 1e-8


def test_sphere_jet_at_equator():
    jet = eval_metric_jet2(sphere_spec(), np.array([np.pi / 2, 0.0]))
    assert np.allclose(jet.g, np.eye(2))
    assert abs(jet.dg[0, 1, 1]) < 1e-15


def test_sphere_chart_excludes_poles():
    with pytest.raises(ConfigInvalid):
        eval_metric_jet2(FieldSpec("sphere", {}, ChartBox((0.0, 0.0), (1.0, 1.0), (4, 4))), np.array([0.5, 0.5]))


def test_fd_convergence_order():
    """Halving the steps reduces the jet error by close to 4x for analytic kinds."""
    spec = random_spd_metric(3, 2, ChartBox.cube(2))
    X = sample_points(spec.box, 8, 1)
    exact = eval_metric_jet2(spec, X)
    errs1, errs2 = [], []
    for h in (4e-2, 2e-2):
        j = eval_metric_jet2(spec, X, FDConfig(h, h), method="fd")
        errs1.append(np.max(np.abs(j.dg - exact.dg)))
        errs2.append(np.max(np.abs(j.ddg - exact.ddg)))
    assert errs1[0] / errs1[1] >= 3.5
    assert errs2[0] / errs2[1] >= 3.5


def _symmetry_specs():
    from flatlab.catalog import conformal_quadratic, conformal_trig_2d, harmonic_diagonal_3d, unit_box

    b = unit_box(3)
    return [
        random_spd_metric(5, 3, b),
        conformal_quadratic(b, 1),
        sphere_spec(),
        harmonic_diagonal_3d(b, "0.5*sin(x3)"),
        conformal_trig_2d(unit_box(2)),
    ]


@pytest.mark.parametrize("spec", _symmetry_specs(), ids=lambda s: s.kind)
def test_jet_symmetries(spec):
    j = eval_metric_jet2(spec, sample_points(spec.box, 10, 2))
    assert np.array_equal(j.g, np.swapaxes(j.g, -1, -2))
    assert np.array_equal(j.dg, np.swapaxes(j.dg, -1, -2))
    assert np.array_equal(j.ddg, np.swapaxes(j.ddg, -1, -2))
    assert np.array_equal(j.ddg, np.swapaxes(j.ddg, -3, -4))


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        eval_metric_jet2(sphere_spec(), np.array([0.1, 0.1]))


def test_fd_step_validation():
    with pytest.raises(ConfigInvalid):
        FDConfig(0.5, 0.5).validate(ChartBox.cube(2))


def test_random_spd_metric_positive_everywhere():
    box = ChartBox.cube(3, grid=4)
    for seed in range(50):
        spec = random_spd_metric(seed, 2, box)
        X = sample_points(box, 1000, seed, 0.0)
        g = eval_metric_jet2(spec, X).g
        assert np.all(leading_minors(g) > 0)


def test_random_spd_metric_determinism_and_degree_zero():
    box = ChartBox.cube(3)
    X = sample_points(box, 5, 0)
    a = eval_metric_jet2(random_spd_metric(1, 2, box), X)
    b = eval_metric_jet2(random_spd_metric(1, 2, box), X)
    assert np.array_equal(a.g, b.g)
    const = eval_metric_jet2(random_spd_metric(0, 0, box), X)
    assert np.allclose(const.g, const.g[0]) and not np.any(const.dg)


def test_not_positive_definite_metric():
    spec = FieldSpec("euclidean", {"c": [[1.0, 2.0], [2.0, 1.0]]}, ChartBox.cube(2))
    with pytest.raises(NotPositiveDefinite):
        eval_metric_jet2(spec, np.zeros(2))


def test_tabulated_and_soliton_connection_jets():
    C = np.arange(8.0).reshape(2, 2, 2)
    C = 0.5 * (C + np.swapaxes(C, 1, 2))
    cj = eval_connection_jet1(FieldSpec("tabulated_connection", {"C": C.tolist()}, ChartBox.cube(2)), np.zeros(2))
    assert np.array_equal(cj.Gamma, C) and not cj.dGamma.any()
    shift = 2.0
    spec = FieldSpec("soliton_connection", {"c": [[[-1.0]]], "shift": shift}, ChartBox((0.0,), (1.0,), (4,)))
    x = np.array([0.3])
    cj = eval_connection_jet1(spec, x)
    assert cj.Gamma[0, 0, 0] == pytest.approx(1 / (0.3 + shift))
    assert cj.dGamma[0, 0, 0, 0] == pytest.approx(-1 / (0.3 + shift) ** 2)


def test_custom_expression_field_matches_closed_form():
    box = ChartBox.cube(2)
    custom = FieldSpec("custom", {"g": [["1+x1^2", 0], [0, "1+x1^2"]]}, box)
    closed = FieldSpec("conformal", {"scalar": {"id": "quadratic", "c0": 1.0, "a": [0, 0], "Q": [[1, 0], [0, 0]]}}, box)
    X = sample_points(box, 6, 3)
    a, b = eval_metric_jet2(custom, X), eval_metric_jet2(closed, X)
    assert np.max(np.abs(a.g - b.g)) < 1e-14
    assert np.max(np.abs(a.ddg - b.ddg)) < 1e-5

"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict that the session summary prints (see
conftest.py); ``python tests/test_acceptance.py`` prints the same lines directly.
"""
from __future__ import annotations

import json
import time

import numpy as np
import pytest
import yaml

from flatlab import cli
from flatlab.catalog import (
    conformal_quadratic,
    conformal_trig_2d,
    riccati_soliton,
    unit_box,
    variation_fields,
)
from flatlab.curvature import (
    bianchi1_residual,
    bianchi2_residual,
    christoffel,
    curvature_bundle,
    is_harmonic,
    nabla_riemann,
    reconstruct_riemann_3d,
    ricci_from_mixed,
    ricci_harmonic,
    ricci_logdet,
    riemann_mixed,
    veblen_residual,
)
from flatlab.fields import ChartBox, FieldSpec, build_metric, eval_connection_jet1, eval_metric_jet2, random_spd_metric
from flatlab.flatness import (
    CurvaturePrescription,
    cone_condition,
    gray_volume_check,
    integrability_check,
    normal_metric_from_curvature,
    riccati_implies_flat,
    sample_points,
)
from flatlab.tensor_core import apply_P, apply_T4, system_census
from flatlab.variational import (
    EL_TABLE,
    FamilySpec,
    GridQuadrature,
    MinimizeOptions,
    einstein_constraint_residual,
    el_oracle_match,
    el_residual,
    minimize_deviation,
    random_bumps,
)
from flatlab.variational.ids import FunctionalId

RESULTS: dict[int, str] = {}


def record(number: int, title: str, passed: bool, detail: str) -> bool:
    RESULTS[number] = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    print(RESULTS[number])
    return passed


def maxabs(a) -> float:
    return float(np.max(np.abs(a)))


# --- 1. identity suite ---------------------------------------------------------------------


def criterion_1() -> bool:
    worst_alg, worst_fd = 0.0, 0.0
    for k in range(50):
        n = (2, 3, 4)[k % 3]
        spec = random_spd_metric(100 + k, 1 + k % 3, unit_box(n, 4))
        X = sample_points(spec.box, 3, k)
        b = curvature_bundle(eval_metric_jet2(spec, X))
        R = b.Rlower
        scale = maxabs(R)
        alg = max(
            maxabs(R - np.einsum("...ijkl->...klij", R)),
            maxabs(R + np.swapaxes(R, -1, -2)),
            maxabs(R + np.swapaxes(R, -3, -4)),
            maxabs(bianchi1_residual(R)),
        )
        DR = nabla_riemann(build_metric(spec), X, 1e-2)
        fd = max(maxabs(bianchi2_residual(DR)), maxabs(veblen_residual(DR)))
        worst_alg, worst_fd = max(worst_alg, alg / scale), max(worst_fd, fd / scale)
    ok = worst_alg < 1e-8 and worst_fd < 1e-5
    return record(1, "identity suite", ok, f"symmetries+Bianchi1 {worst_alg:.1e} (<1e-8), Bianchi2+Veblen {worst_fd:.1e} (<1e-5) x ||R||")


# --- 2. operator spectra ---------------------------------------------------------------------


def criterion_2() -> bool:
    rng = np.random.default_rng(2)
    idem, sym, anti = 0.0, 0.0, 0.0
    for n in (2, 3, 4):
        X = rng.normal(size=(n, n))
        idem = max(idem, maxabs(apply_P(apply_P(X)) - apply_P(X)))
        sym = max(sym, maxabs(apply_P(X + X.T)))
        anti = max(anti, maxabs(apply_P(X - X.T) - (X - X.T)))
        Y = rng.normal(size=(n,) * 4)
        sym = max(sym, maxabs(apply_T4(Y + np.swapaxes(Y, 0, 1))), maxabs(apply_T4(Y + np.swapaxes(Y, 2, 3))))
        A = Y - np.swapaxes(Y, 0, 1)
        A = A - np.swapaxes(A, 2, 3)
        anti = max(anti, maxabs(apply_T4(A) - 2 * A))
    ok = idem < 1e-14 and sym < 1e-13 and anti < 1e-13
    return record(2, "operator spectra", ok, f"P^2-P {idem:.1e}, symmetric kernel {sym:.1e}, eigenvalues 1 and 2 {anti:.1e}")


# --- 3. multi-route Ricci --------------------------------------------------------------------


def ricci_test_fields():
    b = unit_box(2)
    fields = [conformal_trig_2d(b, amp=0.1 + 0.03 * k, k=(1.0 + k % 3, 2.0 - 0.2 * k), phase=0.1 * k) for k in range(10)]
    fields += [conformal_quadratic(b, seed=k, scale=0.4) for k in range(10)]
    return fields


def criterion_3() -> bool:
    worst = 0.0
    gauge_ok = True
    for spec in ricci_test_fields():
        jet = eval_metric_jet2(spec, sample_points(spec.box, 8, 0))
        gauge_ok &= is_harmonic(jet)
        a = ricci_from_mixed(riemann_mixed(christoffel(jet)))
        b, c = ricci_logdet(jet), ricci_harmonic(jet)
        worst = max(worst, maxabs(a - b), maxabs(a - c), maxabs(b - c))
    ok = gauge_ok and worst < 1e-7
    return record(3, "multi-route Ricci", ok, f"20 conformal 2D fields, worst pairwise {worst:.1e} (<1e-7)")


# --- 4. closed-form curvature ---------------------------------------------------------------


def criterion_4() -> bool:
    sphere_err = 0.0
    for r in (0.5, 1.0, 2.0):
        spec = FieldSpec("sphere", {"radius": r}, ChartBox((0.5, 0.0), (2.6, 6.0), (8, 8)))
        jet = eval_metric_jet2(spec, sample_points(spec.box, 8, 0))
        b = curvature_bundle(jet)
        sphere_err = max(sphere_err, maxabs(b.scalar - 2 / r**2), maxabs(b.Ric - jet.g / r**2))
    weyl_err, recon_err = 0.0, 0.0
    for k in range(20):
        spec = random_spd_metric(200 + k, 2, unit_box(3, 4))
        jet = eval_metric_jet2(spec, sample_points(spec.box, 4, k))
        b = curvature_bundle(jet)
        weyl_err = max(weyl_err, maxabs(b.weyl))
        recon_err = max(recon_err, maxabs(reconstruct_riemann_3d(jet.g, b.Ric, b.scalar) - b.Rlower))
    ok = sphere_err < 1e-6 and weyl_err < 1e-8 and recon_err < 1e-7
    return record(
        4,
        "closed-form curvature",
        ok,
        f"sphere scalar/Ricci {sphere_err:.1e} (<1e-6), 3D Weyl {weyl_err:.1e} (<1e-8), 3D reconstruction {recon_err:.1e} (<1e-7)",
    )


# --- 5. Riccati chain ------------------------------------------------------------------------


def criterion_5() -> bool:
    line = ChartBox((0.0,), (1.0,), (8,))
    square = ChartBox.cube(2, 0.0, 1.0, 8)
    cases = [(riccati_soliton(line, [1.0]), "plus"), (riccati_soliton(square, [0.3, 0.7]), "plus")]
    ric, curv, integ = 0.0, 0.0, 0.0
    for spec, which in cases:
        X = sample_points(spec.box, 20, 0)
        chk = riccati_implies_flat(eval_connection_jet1(spec, X), which)
        ric, curv = max(ric, chk.riccati_norm), max(curv, chk.curvature_norm)
        integ = max(integ, integrability_check(spec, which, X))
    vertex = np.zeros((2, 2, 2))
    nilpotent = np.zeros((2, 2, 2))
    nilpotent[0, 1, 1] = 1.0
    failing = np.zeros((2, 2, 2))
    failing[0, 0, 0] = 1.0
    cones = (cone_condition(vertex), cone_condition(nilpotent), cone_condition(failing))
    ok = ric < 1e-8 and curv < 1e-8 and integ < 1e-6 and cones == (0.0, 0.0, 1.0)
    return record(
        5,
        "Riccati chain",
        ok,
        f"Riccati {ric:.1e}, curvature {curv:.1e} (<1e-8), integrability {integ:.1e} (<1e-6), cone values {cones} (expect 0, 0, 1)",
    )


# --- 6. normal-coordinate prescription -------------------------------------------------------


def criterion_6() -> bool:
    worst, min_ratio = 0.0, np.inf
    for k in range(10):
        n = 2 + k % 2
        p = CurvaturePrescription.random(300 + k, n, 0.1)
        spec = normal_metric_from_curvature(p, unit_box(n))
        got = curvature_bundle(eval_metric_jet2(spec, np.zeros(n))).Rlower
        worst = max(worst, maxabs(got - p.R0))
        e1, e2 = gray_volume_check(spec, 0.2, p.ricci), gray_volume_check(spec, 0.1, p.ricci)
        min_ratio = min(min_ratio, e1 / e2)
    ok = worst < 5e-4 and min_ratio >= 6.0
    return record(6, "normal-coordinate prescription", ok, f"curvature at origin {worst:.1e} (<5e-4), Gray halving ratio >= {min_ratio:.1f} (>=6)")


# --- 7. variational oracle -------------------------------------------------------------------


def criterion_7() -> bool:
    per_id = {}
    for fid in EL_TABLE:
        worst = 0.0
        for spec in variation_fields(fid):
            quad = GridQuadrature(spec.box)
            worst = max(worst, el_oracle_match(fid, spec, random_bumps(quad, 5, 0, fid.is_connection), quad).worst)
        per_id[str(fid)] = worst
    flat = FieldSpec("euclidean", {"c": [[2.0, 0.3, 0.1], [0.3, 1.5, -0.2], [0.1, -0.2, 1.0]]}, unit_box(3, 8))
    X = sample_points(flat.box, 6, 0)
    flat_worst = max(maxabs(el_residual(fid, flat, X)) for fid in EL_TABLE)
    sphere = FieldSpec("sphere", {}, ChartBox((0.5, 0.0), (2.6, 6.0), (8, 8)))
    einstein = maxabs(einstein_constraint_residual(sphere, sample_points(sphere.box, 6, 0)))
    worst_id = max(per_id, key=per_id.get)
    ok = max(per_id.values()) < 0.05 and flat_worst < 1e-8 and einstein < 1e-8
    for name, w in per_id.items():
        print(f"    {name:34s} worst mismatch {w:.1e}")
    return record(
        7,
        "variational oracle",
        ok,
        f"12 ids x 3 fields x 5 bumps, worst {per_id[worst_id]:.1e} ({worst_id}) (<5%), "
        f"flat residuals {flat_worst:.1e} (<1e-8), Einstein constraint on sphere {einstein:.1e}",
    )


# --- 8. minimizer ----------------------------------------------------------------------------


def criterion_8() -> bool:
    fam = FamilySpec("conformal_scale", unit_box(2, 24))
    res = minimize_deviation(FunctionalId("RiemannNorm", "Metric"), fam, GridQuadrature(fam.box), [0.3], MinimizeOptions(max_iters=200))
    monotone = all(b <= a for a, b in zip(res.trace, res.trace[1:]))
    ok = res.trace[-1] < 1e-7 and abs(res.theta[0]) < 1e-4 and res.iterations <= 200 and monotone
    return record(
        8,
        "minimizer",
        ok,
        f"{res.iterations} iterations, functional {res.trace[-1]:.1e} (<1e-7), |theta| {abs(res.theta[0]):.1e} (<1e-4), monotone {monotone}",
    )


# --- 9. census -------------------------------------------------------------------------------


def expected_kind(system: str, n: int) -> str:
    """The determinacy sentences, transcribed as thresholds on n."""
    threshold = {"ConnFlat1": 1, "CurvFlatConn": 7, "CurvFlatMetric": 3, "RicciFlatConn": 1}[system]
    if n == threshold:
        return "determined"
    above = {"ConnFlat1": "over", "CurvFlatConn": "over", "CurvFlatMetric": "over", "RicciFlatConn": "under"}[system]
    return above if n > threshold else "under"


def criterion_9() -> bool:
    mismatches = [
        (s, n)
        for s in ("ConnFlat1", "CurvFlatConn", "CurvFlatMetric", "RicciFlatConn")
        for n in range(1, 9)
        if system_census(s, n).kind != expected_kind(s, n)
    ]
    counts_ok = tuple(system_census("CurvFlatConn", 7)) == (196, 196, "determined") and tuple(
        system_census("CurvFlatMetric", 3)
    ) == (6, 6, "determined")
    ok = not mismatches and counts_ok
    return record(9, "census", ok, f"4 systems x n=1..8, mismatches {mismatches or 'none'}")


# --- 10. CLI determinism and exit codes ------------------------------------------------------


def criterion_10(tmp_path) -> bool:
    sphere = {"kind": "sphere", "box": {"lower": [0.5, 0.0], "upper": [2.6, 6.0], "grid": [16, 16]}}
    curved = {"kind": "polynomial_spd", "seed": 1, "params": {"degree": 2}, "box": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5], "grid": [8, 8]}}
    euclid = {"kind": "euclidean", "params": {"c": [[2, 0.1], [0.1, 1]]}, "box": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5], "grid": [8, 8]}}

    def cfg_file(name, cfg):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(cfg))
        return str(path)

    reports = []
    for k in range(2):
        out = tmp_path / f"det{k}.json"
        cli.main(["verify", "--config", cfg_file("det.yaml", {"field": sphere, "seed": 7}), "--output.report", str(out)])
        doc = json.loads(out.read_text())
        doc.pop("timings")
        doc["config"].pop("output")
        reports.append(cli.report_json(doc))
    identical = reports[0] == reports[1]
    codes = {
        "pass": (cli.main(["verify", "--config", cfg_file("ok.yaml", {"field": euclid, "output": {"report": str(tmp_path / "o.json")}})]), 0),
        "check failure": (
            cli.main(["verify", "--config", cfg_file("f.yaml", {"field": curved, "tolerances": {"fd": 1e-16}, "output": {"report": str(tmp_path / "f.json")}})]),
            1,
        ),
        "config": (cli.main(["verify", "--config", cfg_file("c.yaml", {"field": euclid, "bogus": 1})]), 2),
        "numerical": (
            cli.main(["verify", "--config", cfg_file("n.yaml", {"field": {**euclid, "params": {"c": [[1, 2], [2, 1]]}}})]),
            3,
        ),
        "domain": (cli.main(["flatness", "--config", cfg_file("d.yaml", {"field": sphere, "sample": {"shrink": -0.5}})]), 4),
    }
    codes_ok = all(got == want for got, want in codes.values())
    detail = ", ".join(f"{k} {got}" for k, (got, _) in codes.items())
    return record(10, "CLI determinism and exit codes", identical and codes_ok, f"byte-identical {identical}; exit codes {detail}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k + 1}" for k in range(len(CRITERIA))])
def test_criterion(criterion):
    assert criterion()


def test_criterion_10(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    t0 = time.perf_counter()
    for c in CRITERIA:
        c()
    with tempfile.TemporaryDirectory() as d:
        criterion_10(Path(d))
    print(f"total {time.perf_counter() - t0:.1f} s")

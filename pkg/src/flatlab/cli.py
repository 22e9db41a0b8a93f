"""Configuration-driven command line: ``flatlab <command> --config <path> [--a.b value ...]``.

Every run writes one JSON report (sorted keys) with the normalized config, its
hash, one row per check and the numerical results.  Exit status:

    0  every check passed
    1  at least one check failed
    2  invalid configuration (or an unwritable output path)
    3  numerical failure (lost positive definiteness, failed line search, ...)
    4  evaluation outside the chart domain or off the required gauge
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import sys
import time
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__
from .catalog import unit_box
from .curvature import (
    bianchi1_residual,
    bianchi2_residual,
    curvature_bundle,
    nabla_riemann,
    veblen_residual,
)
from .errors import (
    ConfigInvalid,
    FlatlabError,
    GaugeViolation,
    IoFailure,
    OutOfDomain,
)
from .fields import ChartBox, FDConfig, FieldSpec, build_metric, eval_metric_jet2
from .flatness import (
    CurvaturePrescription,
    classify_flatness,
    gray_volume_check,
    normal_metric_from_curvature,
    sample_points,
)
from .tensor_core import System, invert_spd, system_census
from .variational import (
    Density,
    FamilySpec,
    FunctionalId,
    GridQuadrature,
    MinimizeOptions,
    el_oracle_match,
    functional,
    minimize_deviation,
    random_bumps,
)

COMMANDS = ("curvature", "verify", "flatness", "deviation", "minimize", "normal-metric", "census")

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DOMAIN = 0, 1, 2, 3, 4

DEFAULT_TOLERANCES = {"analytic": 1e-8, "fd": 1e-5, "oracle": 0.05, "normal": 5e-4}

# keys allowed at the top level, per command
_COMMON = {"command", "seed", "tolerances", "output"}
_ALLOWED = {
    "curvature": _COMMON | {"field", "sample", "fd"},
    "verify": _COMMON | {"field", "sample", "fd"},
    "flatness": _COMMON | {"field", "sample"},
    "deviation": _COMMON | {"field", "functional", "quad", "fd", "oracle"},
    "minimize": _COMMON | {"functional", "family", "theta0", "options", "quad"},
    "normal-metric": _COMMON | {"prescription", "box", "series", "gray"},
    "census": _COMMON | {"census"},
}
_SUBKEYS = {
    "tolerances": set(DEFAULT_TOLERANCES),
    "output": {"report", "table"},
    "sample": {"count", "shrink"},
    "fd": {"h1", "h2"},
    "quad": {"margin", "grid"},
    "oracle": {"bumps", "form", "eps"},
    "options": {"step0", "backtrack", "armijo", "max_iters", "grad_tol", "fd_step"},
    "prescription": {"n", "scale", "seed", "R0"},
    "gray": {"rho", "count"},
    "census": {"system", "n"},
}
# config paths that do not change what is computed
_HASH_EXCLUDED = ("output",)


# --- config handling ------------------------------------------------------------------------


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path!r}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"config {path!r} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a mapping at the top level")
    return data


def _parse_value(text: str) -> Any:
    if "," in text and not text.lstrip().startswith(("[", "{")):
        return [yaml.safe_load(part) for part in text.split(",")]
    return yaml.safe_load(text)


def apply_overrides(cfg: dict, pairs: list[str]) -> dict:
    """Apply ``--a.b value`` flags; the path mirrors nested config keys."""
    cfg = copy.deepcopy(cfg)
    if len(pairs) % 2:
        raise ConfigInvalid(f"override {pairs[-1]!r} has no value")
    for flag, value in zip(pairs[::2], pairs[1::2]):
        if not flag.startswith("--") or len(flag) < 3:
            raise ConfigInvalid(f"overrides look like --a.b value, got {flag!r}")
        keys = flag[2:].split(".")
        node = cfg
        for k in keys[:-1]:
            nxt = node.setdefault(k, {})
            if not isinstance(nxt, dict):
                raise ConfigInvalid(f"override {flag} descends into a non-mapping")
            node = nxt
        node[keys[-1]] = _parse_value(value)
    return cfg


def _sub(cfg: dict, key: str, defaults: dict) -> dict:
    raw = cfg.get(key) or {}
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{key!r} must be a mapping")
    unknown = set(raw) - _SUBKEYS[key]
    if unknown:
        raise ConfigInvalid(f"unknown keys under {key!r}: {sorted(unknown)}")
    return {**defaults, **raw}


def normalize_config(command: str, cfg: dict) -> dict:
    """Validate keys and fill defaults, so equivalent configs normalize identically."""
    if command not in COMMANDS:
        raise ConfigInvalid(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    if cfg.get("command", command) != command:
        raise ConfigInvalid(f"config is for command {cfg['command']!r}, not {command!r}")
    unknown = set(cfg) - _ALLOWED[command]
    if unknown:
        raise ConfigInvalid(f"unknown config keys for {command}: {sorted(unknown)}")
    out: dict = {"command": command, "seed": int(cfg.get("seed", 0))}
    out["tolerances"] = {k: float(v) for k, v in _sub(cfg, "tolerances", DEFAULT_TOLERANCES).items()}
    out["output"] = _sub(cfg, "output", {"report": None, "table": None})
    keys = _ALLOWED[command]
    if "field" in keys:
        if "field" not in cfg:
            raise ConfigInvalid(f"{command} needs a 'field'")
        out["field"] = FieldSpec.from_dict(cfg["field"]).to_dict()
    if "sample" in keys:
        out["sample"] = _sub(cfg, "sample", {"count": 16, "shrink": 0.1})
    if "fd" in keys:
        out["fd"] = _sub(cfg, "fd", {"h1": None, "h2": None})
    if "functional" in keys:
        if "functional" not in cfg:
            raise ConfigInvalid(f"{command} needs a 'functional' such as RiemannNorm/Metric")
        out["functional"] = str(FunctionalId.parse(str(cfg["functional"])))
    if "quad" in keys:
        out["quad"] = _sub(cfg, "quad", {"margin": None, "grid": None})
        if out["quad"]["grid"] is not None:
            out["quad"]["grid"] = [int(m) for m in np.atleast_1d(out["quad"]["grid"])]
    if command == "deviation":
        out["oracle"] = _sub(cfg, "oracle", {"bumps": 0, "form": "derived", "eps": 1e-6})
    if command == "minimize":
        if "family" not in cfg:
            raise ConfigInvalid("minimize needs a 'family'")
        fam = FamilySpec.from_dict(cfg["family"])
        out["family"] = fam.to_dict()
        theta0 = cfg.get("theta0", [0.0] * fam.k)
        theta0 = [float(t) for t in np.atleast_1d(np.asarray(theta0, dtype=float))]
        if len(theta0) != fam.k:
            raise ConfigInvalid(f"theta0 needs {fam.k} entries")
        out["theta0"] = theta0
        out["options"] = _sub(cfg, "options", MinimizeOptions().__dict__)
    if command == "normal-metric":
        pres = _sub(cfg, "prescription", {"n": 2, "scale": 0.1, "seed": out["seed"], "R0": None})
        out["prescription"] = pres
        n = int(pres["n"])
        box = cfg.get("box") or unit_box(n).to_dict()
        out["box"] = ChartBox.from_dict(box).to_dict()
        out["series"] = str(cfg.get("series", "curvature"))
        out["gray"] = _sub(cfg, "gray", {"rho": [], "count": 64})
    if command == "census":
        c = _sub(cfg, "census", {"system": "all", "n": [1, 2, 3, 4, 5, 6, 7, 8]})
        systems = [s.value for s in System] if c["system"] == "all" else list(np.atleast_1d(c["system"]))
        for s in systems:
            try:
                System(s)
            except ValueError:
                raise ConfigInvalid(f"unknown census system {s!r}") from None
        out["census"] = {"system": [str(s) for s in systems], "n": [int(k) for k in np.atleast_1d(c["n"])]}
    return out


def config_hash(cfg: dict) -> str:
    payload = {k: v for k, v in cfg.items() if k not in _HASH_EXCLUDED}
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=_json_default).encode()).hexdigest()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


# --- checks and reports ---------------------------------------------------------------------


def check(name: str, value: float, tolerance: float | None, passed: bool | None = None, note: str | None = None) -> dict:
    """One report row; ``tolerance=None`` marks an informational value that always passes."""
    value = float(value)
    if passed is None:
        passed = True if tolerance is None else bool(value < tolerance)
    row = {"name": name, "value": value, "tolerance": tolerance, "pass": bool(passed)}
    if note:
        row["note"] = note
    return row


def _fd(cfg: dict, box: ChartBox) -> FDConfig:
    d = FDConfig.default(box)
    fd = FDConfig(cfg["fd"]["h1"] or d.h1, cfg["fd"]["h2"] or d.h2)
    fd.validate(box)
    return fd


def _quad_box(cfg: dict, box: ChartBox) -> ChartBox:
    """The chart box with ``quad.grid`` (when given) replacing its cell counts."""
    grid = cfg["quad"]["grid"]
    if grid is None:
        return box
    if len(grid) == 1:
        grid = grid * box.n
    return ChartBox(box.lower, box.upper, grid)


def _points(cfg: dict, spec: FieldSpec) -> np.ndarray:
    s = cfg["sample"]
    return sample_points(spec.box, int(s["count"]), cfg["seed"], float(s["shrink"]))


def run_curvature(cfg: dict):
    spec = FieldSpec.from_dict(cfg["field"])
    if not spec.is_metric:
        raise ConfigInvalid("curvature needs a metric field")
    X = _points(cfg, spec)
    b = curvature_bundle(eval_metric_jet2(spec, X, _fd(cfg, spec.box)))
    results = {
        "points": X.tolist(),
        "scalar": b.scalar.tolist(),
        "riemann_max": float(np.max(np.abs(b.Rlower))),
        "ricci_max": float(np.max(np.abs(b.Ric))),
        "weyl_max": None if b.weyl is None else float(np.max(np.abs(b.weyl))),
    }
    checks = [
        check("scalar-min", np.min(b.scalar), None),
        check("scalar-max", np.max(b.scalar), None),
        check("riemann-max", results["riemann_max"], None),
    ]
    return checks, results


def run_verify(cfg: dict):
    spec = FieldSpec.from_dict(cfg["field"])
    if not spec.is_metric:
        raise ConfigInvalid("verify needs a metric field")
    X = _points(cfg, spec)
    fd = _fd(cfg, spec.box)
    jet = eval_metric_jet2(spec, X, fd)
    b = curvature_bundle(jet)
    R = b.Rlower
    scale = max(float(np.max(np.abs(R))), 1.0)
    rel = lambda a: float(np.max(np.abs(a), initial=0.0)) / scale  # noqa: E731
    tol_a, tol_f = cfg["tolerances"]["analytic"], cfg["tolerances"]["fd"]
    if not build_metric(spec).analytic:
        tol_a = tol_f
    antisym = max(rel(R + np.swapaxes(R, -4, -3)), rel(R + np.swapaxes(R, -2, -1)))
    pair = rel(R - np.einsum("...ijkl->...klij", R))
    h = 1e-2 * float(np.min(spec.box.extent))
    DR = nabla_riemann(build_metric(spec), X, h)
    checks = [
        check("antisym", antisym, tol_a),
        check("bianchi1", rel(bianchi1_residual(b.Rmixed)), tol_a),
        check("bianchi2", rel(bianchi2_residual(DR)), tol_f),
        check("veblen", rel(veblen_residual(DR)), tol_f),
        check("pair-sym", pair, tol_a),
    ]
    if b.weyl is None:
        checks.append(check("weyl-trace", 0.0, tol_a, note="not applicable for n < 3"))
    else:
        K = invert_spd(jet.g)
        checks.append(check("weyl-trace", rel(np.einsum("...ik,...ijkl->...jl", K, b.weyl)), tol_a))
    return checks, {"riemann_scale": scale, "points": len(X)}


def run_flatness(cfg: dict):
    spec = FieldSpec.from_dict(cfg["field"])
    X = _points(cfg, spec)
    rep = classify_flatness(spec, X)
    res = rep.to_dict()
    checks = [check(f"residual-{k}", v, None) for k, v in sorted(rep.max_residuals.items()) if v is not None]
    for flag in ("connection_flat", "curvature_flat", "ricci_flat", "scalar_flat"):
        checks.append(check(flag, float(res[flag]), None))
    chain = (not rep.curvature_flat or rep.ricci_flat) and (not rep.ricci_flat or rep.scalar_flat)
    checks.append(check("monotone-chain", 0.0 if chain else 1.0, None, passed=chain))
    return checks, res


def run_deviation(cfg: dict):
    spec = FieldSpec.from_dict(cfg["field"])
    fid = FunctionalId.parse(cfg["functional"])
    box = _quad_box(cfg, spec.box)
    fd = _fd(cfg, box)
    quad = GridQuadrature(box, cfg["quad"]["margin"], fd)
    value = functional(fid, spec, quad)
    checks = []
    if fid.density is not Density.TotalScalar:
        checks.append(check("nonnegative", value, None, passed=value >= -cfg["tolerances"]["analytic"]))
    results = {"functional": value, "margin": quad.margin}
    o = cfg["oracle"]
    if int(o["bumps"]) > 0:
        bumps = random_bumps(quad, int(o["bumps"]), cfg["seed"], fid.is_connection)
        m = el_oracle_match(fid, spec, bumps, quad, float(o["eps"]), str(o["form"]))
        checks.append(check("oracle-mismatch", m.worst, cfg["tolerances"]["oracle"]))
        results["oracle_rows"] = [list(r) for r in m.rows]
    return checks, results


def run_minimize(cfg: dict):
    fid = FunctionalId.parse(cfg["functional"])
    fam = FamilySpec.from_dict(cfg["family"])
    quad = GridQuadrature(_quad_box(cfg, fam.box), cfg["quad"]["margin"])
    res = minimize_deviation(fid, fam, quad, cfg["theta0"], MinimizeOptions(**cfg["options"]))
    tr = res.trace
    monotone = all(b <= a for a, b in zip(tr, tr[1:]))
    checks = [
        check("monotone-trace", 0.0 if monotone else 1.0, None, passed=monotone),
        check("converged", res.grad_norm, cfg["options"]["grad_tol"], passed=res.converged),
        check("final-functional", tr[-1], None),
    ]
    return checks, res.to_dict()


def run_normal_metric(cfg: dict):
    p = cfg["prescription"]
    n = int(p["n"])
    if p["R0"] is not None:
        pres = CurvaturePrescription(n, np.asarray(p["R0"], dtype=float))
    else:
        pres = CurvaturePrescription.random(int(p["seed"]), n, float(p["scale"]))
    box = ChartBox.from_dict(cfg["box"])
    spec = normal_metric_from_curvature(pres, box, cfg["series"])
    jet = eval_metric_jet2(spec, np.zeros((1, n)))
    got = curvature_bundle(jet).Rlower[0]
    err = float(np.max(np.abs(got - pres.R0)))
    checks = [check("curvature-at-origin", err, cfg["tolerances"]["normal"])]
    results = {"R0": pres.R0.tolist(), "metric": spec.to_dict(), "curvature_at_origin": got.tolist()}
    gray = []
    for rho in np.atleast_1d(cfg["gray"]["rho"]):
        e = gray_volume_check(spec, float(rho), pres.ricci, int(cfg["gray"]["count"]), cfg["seed"])
        gray.append({"rho": float(rho), "error": e})
        checks.append(check(f"gray-rho-{float(rho):g}", e, None))
    results["gray"] = gray
    return checks, results


def run_census(cfg: dict):
    rows, checks = [], []
    for s in cfg["census"]["system"]:
        for n in cfg["census"]["n"]:
            c = system_census(s, n)
            rows.append({"system": s, "n": n, "equations": c.equations, "unknowns": c.unknowns, "kind": c.kind})
            checks.append(check(f"{s}-n{n}", c.equations - c.unknowns, None, note=c.kind))
    return checks, {"census": rows}


RUNNERS: dict[str, Callable[[dict], tuple]] = {
    "curvature": run_curvature,
    "verify": run_verify,
    "flatness": run_flatness,
    "deviation": run_deviation,
    "minimize": run_minimize,
    "normal-metric": run_normal_metric,
    "census": run_census,
}


def run(cfg: dict) -> dict:
    """Execute a normalized config and return the report document."""
    t0 = time.perf_counter()
    checks, results = RUNNERS[cfg["command"]](cfg)
    return {
        "command": cfg["command"],
        "config": cfg,
        "config_hash": config_hash(cfg),
        "checks": checks,
        "results": results,
        "passed": all(c["pass"] for c in checks),
        "timings": {"total_seconds": time.perf_counter() - t0},
        "version": __version__,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"


def report_table(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "tolerance", "pass"])
    for c in report["checks"]:
        w.writerow([c["name"], repr(c["value"]), "" if c["tolerance"] is None else repr(c["tolerance"]), c["pass"]])
    return buf.getvalue()


def emit_report(report: dict, path: str | None, fmt: str = "json") -> str:
    """Serialize the report; write it to ``path`` when given.  Raises IoFailure."""
    text = report_json(report) if fmt == "json" else report_table(report)
    if path:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoFailure(f"cannot write {path!r}: {exc.strerror}") from None
    return text


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (OutOfDomain, GaugeViolation)):
        return EXIT_DOMAIN
    if isinstance(exc, (ConfigInvalid, IoFailure)):
        return EXIT_CONFIG
    if isinstance(exc, FlatlabError):
        return EXIT_NUMERIC
    if isinstance(exc, (ValueError, TypeError, KeyError)):
        return EXIT_CONFIG
    if isinstance(exc, (ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    raise exc


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="flatlab", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = normalize_config(args.command, apply_overrides(load_config(args.config), extra))
        report = run(cfg)
        text = emit_report(report, cfg["output"]["report"])
        if cfg["output"]["table"]:
            emit_report(report, cfg["output"]["table"], fmt="table")
    except Exception as exc:  # mapped to the documented exit codes
        code = exit_code_for(exc)
        print(f"flatlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    if not cfg["output"]["report"]:
        sys.stdout.write(text)
    for c in report["checks"]:
        if not c["pass"]:
            print(f"flatlab: check failed: {c['name']} = {c['value']:.3e} (tolerance {c['tolerance']})", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_CHECKS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

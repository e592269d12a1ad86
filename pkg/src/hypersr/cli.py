"""Command-line pipeline: discover / calibrate / audit / report.

Every run writes a self-describing artifact directory: `manifest.json` with
config and input hashes, CSV/JSON results, and SVG plots.  With a fixed
seed the CSV/JSON artifacts are byte-identical across reruns; pass
--reproducible to also zero the manifest timestamp for golden-file tests.

Exit codes: 0 success, 1 usage/config/data error, 2 physics violation
(the audited model fails the convexity certificate).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, data, exprtree, pareto, svgplot
from .evolve import DiscoveryError, EvolutionConfig, run_discovery
from .exprtree import ParseError
from .fitness import default_penalty_config, expr_stress, hessian_penalty
from .mechanics import (Mode, SymbolicW, Ogden3, calibrate_baseline,
                        dataset_mse, energy_hessian, locking_stretch,
                        model_from_params, model_params, nominal_stress,
                        ogden_forensic, tangent_stiffness_ut)
from .skills import (SamplingDomain, Skill, SkillError, bundled_skill,
                     load_skill, skill_from_dict, skill_to_dict)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

_BASELINE_KINDS = {
    "neo-hookean": "neo_hookean",
    "mooney-rivlin": "mooney_rivlin",
    "yeoh3": "yeoh3",
    "ogden3": "ogden3",
}


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Artifact plumbing
# ---------------------------------------------------------------------------

def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _sha256_obj(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out: Path, command: str, config: dict, skill_info,
                    dataset_paths, seed, reproducible: bool) -> None:
    artifacts = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            artifacts[str(p.relative_to(out))] = _sha256_file(p)
    manifest = {
        "tool_version": __version__,
        "command": command,
        "config": config,
        "config_hash": _sha256_obj(config),
        "skill": skill_info,
        "dataset_hashes": {Path(p).name: _sha256_file(Path(p))
                           for p in dataset_paths},
        "rng_seed": seed,
        "timestamp": "" if reproducible
        else datetime.now(timezone.utc).isoformat(),
        "artifacts": artifacts,
    }
    _write_json(out / "manifest.json", manifest)


def _load_skill_arg(name_or_path: str) -> Skill:
    if os.path.exists(name_or_path):
        return load_skill(name_or_path)
    try:
        return bundled_skill(name_or_path)
    except FileNotFoundError:
        raise CliError(
            f"unknown skill {name_or_path!r}: not a file and not one of the "
            f"bundled skills (hyperelastic_iso, fiber_aniso)") from None


def _load_split(data_dir: str):
    datasets, paths = data.load_directory(data_dir, return_paths=True)
    return data.default_split(datasets), paths


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

def _stress_curve(model_stress, datasets, title: str) -> str:
    chart = svgplot.LineChart(title=title, xlabel="stretch",
                              ylabel="nominal stress [MPa]")
    for i, ds in enumerate(datasets):
        color = svgplot.PALETTE[i % len(svgplot.PALETTE)]
        chart.add_series(f"{ds.mode.value} data", ds.stretch, ds.stress,
                         markers=True, color=color)
        lam = np.linspace(1.0, float(ds.stretch.max()), 120)
        chart.add_series(f"{ds.mode.value} model", lam,
                         model_stress(ds.mode, lam), color=color)
    return chart.render()


def _front_plot(front) -> str:
    chart = svgplot.LineChart(title="Accuracy-complexity front",
                              xlabel="expression complexity (nodes)",
                              ylabel="train MSE [MPa^2]", logy=True)
    chart.add_series("front", [p.complexity for p in front],
                     [p.train_mse for p in front])
    chart.add_series("candidates", [p.complexity for p in front],
                     [p.train_mse for p in front], markers=True,
                     color=svgplot.PALETTE[0])
    return chart.render()


def _hessian_heatmap(hess_fn, grid: np.ndarray) -> str:
    """Minimum Hessian eigenvalue over the admissible invariant rectangle."""
    i1 = np.linspace(0.0, float(np.max(grid[0])), 40)
    i2 = np.linspace(0.0, float(np.max(grid[1])), 40)
    z = np.empty((len(i2), len(i1)))
    for j, b in enumerate(i2):
        w11, w12, w22 = hess_fn(i1, np.full_like(i1, b))
        tr = w11 + w22
        disc = np.sqrt(np.maximum((w11 - w22) ** 2 + 4 * w12**2, 0.0))
        z[j] = 0.5 * (tr - disc)
    return svgplot.heatmap_svg(
        np.round(i1, 2), np.round(i2, 2), z,
        title="Minimum energy-Hessian eigenvalue",
        xlabel="I1 - 3", ylabel="I2 - 3")


def _stiffness_plot(model, lam_max_data: float) -> str:
    lock = locking_stretch(model, Mode.UT)
    lam_hi = min(lock * 0.98, 1.5 * lam_max_data) if lock else 1.5 * lam_max_data
    lam = np.linspace(1.0, max(lam_hi, 1.5), 300)
    k = tangent_stiffness_ut(model, lam)
    ok = np.isfinite(k)
    chart = svgplot.LineChart(title="Uniaxial tangent stiffness",
                              xlabel="stretch", ylabel="dP/dλ [MPa]")
    chart.add_series("tangent stiffness", lam[ok], k[ok])
    if np.any(ok):
        imin = int(np.argmin(np.where(ok, k, np.inf)))
        chart.add_hline(float(k[imin]), f"min stiffness {k[imin]:.3f} MPa")
        chart.annotate(float(lam[imin]), float(k[imin]),
                       f"at stretch {lam[imin]:.2f}")
    if lock:
        chart.add_vline(lock, f"locking stretch {lock:.2f}")
    return chart.render()


# ---------------------------------------------------------------------------
# discover
# ---------------------------------------------------------------------------

def cmd_discover(args) -> int:
    skill = _load_skill_arg(args.skill)
    if args.allow_sqrt_log:
        doc = skill_to_dict(skill)
        doc["operator_whitelist"] = sorted(
            set(doc["operator_whitelist"]) | {"sqrt", "log"})
        skill = skill_from_dict(doc)
    split, dataset_paths = _load_split(args.data)
    pconf = default_penalty_config(split.train, skill)
    config = EvolutionConfig(iterations=args.iterations,
                             populations=args.populations,
                             rng_seed=args.seed)
    out = Path(args.out)
    (out / "plots").mkdir(parents=True, exist_ok=True)

    hall = run_discovery(skill, split.train, config, pconf,
                         checkpoint_path=out / "checkpoint.json")
    front = pareto.extract_front(hall, split.holdout, pconf.samples)
    ranked = pareto.rank_candidates(front)
    rec = ranked[0]

    pareto.write_front_csv(front, out / "front.csv")
    pareto.write_front_json(front, out / "front.json")
    _write_json(out / "recommended.json", {
        "expression": exprtree.format_expr(rec.expr),
        "expr": exprtree.to_json(rec.expr),
        "complexity": rec.complexity,
        "train_mse": rec.train_mse,
        "holdout_mse": rec.holdout_mse,
        "convexity": rec.audit.convexity,
        "flags": sorted(rec.audit.flags),
        "locking_invariant_limit": rec.audit.locking_invariant_limit,
        "knee_complexity": pareto.knee_select(front).complexity,
    })

    model = SymbolicW(rec.expr)
    lam_max = max(float(ds.stretch.max())
                  for ds in split.train + split.holdout)
    (out / "plots" / "pareto_front.svg").write_text(_front_plot(front))
    (out / "plots" / "stress_fits.svg").write_text(_stress_curve(
        lambda m, lam: expr_stress(rec.expr, m, lam),
        split.train + split.holdout, "Recommended model vs data"))
    (out / "plots" / "hessian_heatmap.svg").write_text(_hessian_heatmap(
        lambda a, b: energy_hessian(model, a, b), pconf.samples))
    (out / "plots" / "tangent_stiffness.svg").write_text(
        _stiffness_plot(model, lam_max))

    _write_manifest(out, "discover",
                    {"iterations": args.iterations,
                     "populations": args.populations,
                     "allow_sqrt_log": args.allow_sqrt_log},
                    {"name": skill.name, "hash": _sha256_obj(skill_to_dict(skill))},
                    dataset_paths, args.seed, args.reproducible)
    print(f"recommended: {exprtree.format_expr(rec.expr)}")
    print(f"  complexity {rec.complexity}, train mse {rec.train_mse:.6g}, "
          f"holdout mse {rec.holdout_mse}")
    print(f"  convexity: {rec.audit.convexity}")
    if rec.audit.convexity != pareto.CERTIFIED:
        print("warning: recommended model is not convexity-certified",
              file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    kind = _BASELINE_KINDS[args.kind]
    split, dataset_paths = _load_split(args.data)
    result = calibrate_baseline(kind, split.train)
    overall_hold, per_mode_hold = dataset_mse(result.model, split.holdout) \
        if split.holdout else (None, {})
    out = Path(args.out)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    params = model_params(result.model)
    _write_json(out / "calibration.json", {
        "kind": args.kind,
        "params": params,
        "train_mse": result.mse,
        "per_mode_mse": {m.value: v for m, v in result.mse_per_mode.items()},
        "holdout_mse": overall_hold,
        "per_mode_holdout_mse": {m.value: v for m, v in per_mode_hold.items()},
        "converged": result.converged,
    })
    (out / "plots" / "calibration_fit.svg").write_text(_stress_curve(
        lambda m, lam: nominal_stress(result.model, m, lam),
        split.train + split.holdout, f"Calibrated {args.kind} vs data"))
    _write_manifest(out, "calibrate", {"kind": args.kind}, None,
                    dataset_paths, None, args.reproducible)
    print(f"{args.kind}: train mse {result.mse:.6g}  params "
          + " ".join(f"{p:.6g}" for p in params))
    for m, v in sorted(result.mse_per_mode.items(), key=lambda kv: kv[0].value):
        print(f"  {m.value} mse {v:.6g}")
    if not result.converged:
        print("warning: calibration did not converge; best-so-far emitted",
              file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

def _audit_grid(args):
    from .fitness import build_sample_grid
    if args.data:
        split, paths = _load_split(args.data)
        datasets = split.train + split.holdout
        dom = SamplingDomain()
        lam_max = dom.data_margin * max(float(np.max(ds.stretch))
                                        for ds in datasets)
        return build_sample_grid(datasets, dom), (1.0 / lam_max, lam_max), paths
    dom = SamplingDomain(auto_from_data=False)
    return (build_sample_grid((), dom),
            (dom.lambda_min, dom.lambda_max), [])


def _ogden_heatmap(model, lam_min: float, lam_max: float) -> str:
    from .mechanics import ogden_principal_hessian
    axis = np.linspace(lam_min, lam_max, 40)
    l1, l2 = np.meshgrid(axis, axis, indexing="xy")
    h11, h12, h22 = ogden_principal_hessian(model, l1, l2)
    tr = h11 + h22
    disc = np.sqrt(np.maximum((h11 - h22) ** 2 + 4 * h12**2, 0.0))
    z = 0.5 * (tr - disc)
    return svgplot.heatmap_svg(
        np.round(axis, 2), np.round(axis, 2), z,
        title="Minimum principal-stretch Hessian eigenvalue",
        xlabel="stretch 1", ylabel="stretch 2")


def cmd_audit(args) -> int:
    out = Path(args.out)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    grid, (lam_min, lam_max), dataset_paths = _audit_grid(args)

    doc = {}
    violated = False
    if args.expr:
        expr = exprtree.parse(args.expr)
        report = pareto.structural_audit(expr, grid)
        model = SymbolicW(expr)
        doc.update({
            "expression": exprtree.format_expr(expr),
            "convexity": report.convexity,
            "flags": sorted(report.flags),
            "locking_invariant_limit": report.locking_invariant_limit,
            "hessian_penalty": hessian_penalty(expr, grid),
        })
        violated = report.convexity == pareto.VIOLATED
        heatmap = _hessian_heatmap(
            lambda a, b: energy_hessian(model, a, b), grid)
    else:
        params = [float(p) for p in args.params.split(",")]
        kind = _BASELINE_KINDS[args.baseline]
        model = model_from_params(kind, params)
        from .fitness import relu_penalty
        if isinstance(model, Ogden3):
            from .mechanics import ogden_principal_hessian
            axis = np.linspace(lam_min, lam_max, 24)
            l1, l2 = np.meshgrid(axis, axis)
            h11, h12, h22 = ogden_principal_hessian(model, l1, l2)
            pen = relu_penalty(np.concatenate(
                [(h11 * h22 - h12**2).ravel(), (h11 + h22).ravel()]))
            heatmap = _ogden_heatmap(model, lam_min, lam_max)
        else:
            w11, w12, w22 = energy_hessian(model, grid[0], grid[1])
            pen = relu_penalty(np.concatenate([w11 * w22 - w12**2, w11 + w22]))
            heatmap = _hessian_heatmap(
                lambda a, b: energy_hessian(model, a, b), grid)
        doc.update({
            "baseline": args.baseline,
            "params": params,
            "hessian_penalty": pen,
            "convexity": pareto.GRID_PASS if pen == 0.0 else pareto.VIOLATED,
        })
        violated = pen > 0.0

    lock_ut = locking_stretch(model, Mode.UT)
    lam_probe = np.linspace(1.0, min(lock_ut * 0.98, 8.0) if lock_ut else 8.0, 400)
    k = tangent_stiffness_ut(model, lam_probe)
    finite = np.isfinite(k)
    doc["locking_stretch_ut"] = lock_ut
    doc["locking_stretch_et"] = locking_stretch(model, Mode.ET)
    doc["min_ut_tangent_stiffness"] = (float(np.min(k[finite]))
                                       if np.any(finite) else None)

    if isinstance(model, Ogden3) and args.forensic_lambda is not None:
        forensic = ogden_forensic(model, args.forensic_lambda)
        doc["ogden_forensic"] = {
            "lambda_transverse": forensic.lam_transverse,
            "terms": [
                {"mu": t.mu, "alpha": t.alpha,
                 "stretch_pow_alpha": t.stretch_power,
                 "stretch_pow_alpha_minus_2": t.stiffness_power,
                 "ill_conditioned": t.ill_conditioned}
                for t in forensic.terms
            ],
            "max_amplification": forensic.max_amplification,
            "any_ill_conditioned": forensic.any_ill_conditioned,
        }
        rows = [[f"{t.mu:.4g}", f"{t.alpha:.4g}", f"{t.stretch_power:.4g}",
                 f"{t.stiffness_power:.4g}",
                 "yes" if t.ill_conditioned else "no"]
                for t in forensic.terms]
        (out / "plots" / "ogden_forensic.svg").write_text(svgplot.table_svg(
            ["mu [MPa]", "alpha", "lambda^alpha", "lambda^(alpha-2)",
             "ill-conditioned"], rows,
            title=f"Ogden term amplification at transverse stretch "
                  f"{forensic.lam_transverse:g}"))

    _write_json(out / "audit.json", doc)
    (out / "plots" / "hessian_heatmap.svg").write_text(heatmap)
    (out / "plots" / "tangent_stiffness.svg").write_text(
        _stiffness_plot(model, float(np.max(lam_probe))))
    _write_manifest(out, "audit", {k: v for k, v in doc.items()
                                   if k in ("expression", "baseline", "params")},
                    None, dataset_paths, None, args.reproducible)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_VIOLATION if violated else EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    art = Path(args.artifacts)
    manifest_path = art / "manifest.json"
    if not manifest_path.is_file():
        raise CliError(f"no manifest.json in {art}; run a command first")
    manifest = json.loads(manifest_path.read_text())

    tampered = []
    for rel, digest in manifest.get("artifacts", {}).items():
        p = art / rel
        if not p.is_file():
            tampered.append(f"{rel} (missing)")
        elif _sha256_file(p) != digest:
            tampered.append(f"{rel} (hash mismatch)")

    parts = ["<!DOCTYPE html><html><head><meta charset='utf-8'>",
             "<title>hypersr run report</title>",
             "<style>body{font-family:Helvetica,Arial,sans-serif;margin:2em;}"
             "table{border-collapse:collapse}td,th{border:1px solid #999;"
             "padding:4px 8px}.warn{background:#ffdddd;padding:1em;"
             "border:2px solid #d1495b}</style></head><body>",
             "<h1>hypersr run report</h1>"]
    if tampered:
        parts.append("<div class='warn'><strong>Integrity warning:</strong> "
                     "artifacts differ from the manifest: "
                     + ", ".join(tampered) + "</div>")
    parts.append("<h2>Manifest</h2><pre>"
                 + json.dumps(manifest, indent=2, sort_keys=True)
                 + "</pre>")
    rec_path = art / "recommended.json"
    if rec_path.is_file():
        rec = json.loads(rec_path.read_text())
        parts.append("<h2>Recommended model</h2><pre>"
                     + json.dumps(rec, indent=2, sort_keys=True) + "</pre>")
    front_path = art / "front.csv"
    if front_path.is_file():
        rows = front_path.read_text().strip().split("\n")
        parts.append("<h2>Front</h2><table>")
        for i, row in enumerate(rows):
            tag = "th" if i == 0 else "td"
            cells = "".join(f"<{tag}>{c}</{tag}>" for c in row.split(","))
            parts.append(f"<tr>{cells}</tr>")
        parts.append("</table>")
    plots = sorted((art / "plots").glob("*.svg")) if (art / "plots").is_dir() else []
    for p in plots:
        parts.append(f"<h2>{p.stem}</h2>")
        parts.append(p.read_text())
    parts.append("</body></html>")
    out_path = Path(args.out) if args.out else art / "report.html"
    out_path.write_text("\n".join(parts))
    print(f"report written to {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hypersr",
        description="Physics-constrained symbolic regression for "
                    "hyperelastic strain-energy functions")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="run the evolutionary search")
    d.add_argument("--skill", default="hyperelastic_iso",
                   help="bundled skill name or path to a .skill.json file")
    d.add_argument("--data", required=True, help="directory of CSV datasets")
    d.add_argument("--out", default="artifacts", help="artifact directory")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--iterations", type=int, default=100)
    d.add_argument("--populations", type=int, default=30)
    d.add_argument("--allow-sqrt-log", action="store_true",
                   help="extend the whitelist with sqrt and log")
    d.add_argument("--reproducible", action="store_true",
                   help="zero timestamps for golden-file comparison")
    d.set_defaults(func=cmd_discover)

    c = sub.add_parser("calibrate", help="fit a classical baseline model")
    c.add_argument("kind", choices=sorted(_BASELINE_KINDS))
    c.add_argument("--data", required=True)
    c.add_argument("--out", default="artifacts")
    c.add_argument("--reproducible", action="store_true")
    c.set_defaults(func=cmd_calibrate)

    a = sub.add_parser("audit", help="convexity/stability audit of a model")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--expr", help="energy expression in I1, I2 (shifted)")
    g.add_argument("--baseline", choices=sorted(_BASELINE_KINDS))
    a.add_argument("--params", help="comma-separated baseline parameters")
    a.add_argument("--forensic-lambda", type=float, default=None,
                   help="transverse stretch for the Ogden amplification table")
    a.add_argument("--data", default=None,
                   help="optional dataset directory to size the audit grid")
    a.add_argument("--out", default="artifacts")
    a.add_argument("--reproducible", action="store_true")
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("report", help="bundle artifacts into one HTML file")
    r.add_argument("--artifacts", required=True)
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "audit" and args.baseline and not args.params:
        parser.error("--baseline requires --params")
    try:
        return args.func(args)
    except (CliError, DiscoveryError, SkillError, ParseError,
            data.DataError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

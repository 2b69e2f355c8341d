"""Command-line surface for the sweeps, verification suites, and experiments.

Subcommands: gaussian-sweep, discrete-verify, image-bound, diameter,
estimator-selftest. Every stochastic output is fully determined by --seed.
Exit status: 0 success, 1 verification failure, 2 usage error.

Config files are one JSON document with a section per subcommand; --set
applies dotted-path overrides after the file loads, e.g.
``--set pipeline.n_augment=10`` or ``--set gaussian.R=1.0``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import estimators, gaussian, geometry, pipeline

USAGE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auggap",
        description="Generalization-bound toolkit for learning with data augmentation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=False):
        p.add_argument("--config", type=Path, default=None, help="JSON config document")
        p.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker pool size (default: cores)")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="dotted-path config override, repeatable",
        )
        if trials:
            p.add_argument("--trials", type=int, default=1000, help="trial count per stress sweep")

    common(sub.add_parser("gaussian-sweep", help="closed-form bound component sweep (CSV + SVG)"))
    common(sub.add_parser("discrete-verify", help="exact finite-world verification suite"), trials=True)
    common(sub.add_parser("image-bound", help="image experiment: bound terms vs augmentation strength"))
    common(sub.add_parser("diameter", help="group-diameter estimates across policy strengths"))
    common(sub.add_parser("estimator-selftest", help="MINE and density-ratio calibration checks"))
    return parser


def parse_override(text: str):
    if "=" not in text:
        raise ValueError(f"--set expects KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def apply_overrides(config: dict, overrides) -> dict:
    for text in overrides:
        key, value = parse_override(text)
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return config


def load_config(path: Path | None, overrides) -> dict:
    config: dict = {}
    if path is not None:
        config = json.loads(Path(path).read_text())
    return apply_overrides(config, overrides)


def _cmd_gaussian_sweep(args, config: dict) -> int:
    section = config.get("gaussian", {})
    base_kw = section.get("base", {})
    base = gaussian.GaussianSetting(**base_kw) if base_kw else None
    result = pipeline.run_gaussian_figure(
        args.out,
        base=base,
        t2_grid=section.get("t2_grid"),
        n_grid=section.get("n_grid"),
        m_grid=section.get("m_grid"),
        R=section.get("R", 0.5),
        render_svg=section.get("render_svg", True),
    )
    for path in result["artifacts"].values():
        print(path)
    return 0


def _cmd_discrete_verify(args, config: dict) -> int:
    trials = config.get("discrete", {}).get("trials", args.trials)
    out_path = Path(args.out) / "discrete_report.json"
    report = pipeline.run_discrete_suite(seed=args.seed, trials=trials, out_path=out_path)
    print(out_path)
    for check in report["checks"]:
        print(f"{'PASS' if check['pass'] else 'FAIL'} {check['name']}")
    return 0 if report["all_pass"] else 1


def _cmd_image_bound(args, config: dict) -> int:
    section = dict(config.get("pipeline", {}))
    section.setdefault("seed", args.seed)
    section.setdefault("out_dir", str(args.out))
    section.setdefault("cache_dir", str(Path(args.out) / "cache"))
    section["jobs"] = args.jobs if args.jobs else section.get("jobs", os.cpu_count() or 1)
    cfg = pipeline.config_from_dict(section)
    report = pipeline.run_image_bound_experiment(cfg)
    print(Path(cfg.out_dir) / "report.json")
    unreliable = [r["strength"] for r in report["records"] if r["kl_unreliable_any"]]
    if unreliable:
        print(f"note: KL estimates flagged unreliable at strengths {unreliable}")
    return 0


def _cmd_diameter(args, config: dict) -> int:
    section = config.get("diameter", {})
    strengths = section.get("strengths", [0.0, 0.25, 0.5, 0.75, 1.0])
    num_points = section.get("num_points", 25)
    inner_mc = section.get("inner_mc", 200)
    images, _ = pipeline.synthesize_shape_images(num_points, pipeline.derive_seed(args.seed, "diameter-points"))
    rows = []
    for strength in strengths:
        policy = geometry.AugmentationPolicy(strength=strength, n_augment=1)
        # common random numbers across strengths so the monotonicity
        # comparison is not washed out by independent Monte-Carlo noise
        rng = np.random.default_rng(pipeline.derive_seed(args.seed, "diameter"))
        est = geometry.group_diameter(policy, list(images), inner_mc, rng)
        rows.append(est.to_dict())
    out_path = Path(args.out) / "diameter.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(rows, sort_keys=True, indent=1))
    print(out_path)
    deltas = [r["delta_hat"] for r in rows]
    # sparse centered content leaves the zero-padded frame at extreme
    # translations, so the displacement saturates; allow a 3% dip there
    ok = all(b >= 0.97 * a - 1e-9 for a, b in zip(deltas, deltas[1:]))
    print("PASS monotone (3% saturation slack)" if ok else "FAIL monotone")
    return 0 if ok else 1


def _cmd_estimator_selftest(args, config: dict) -> int:
    section = config.get("estimators", {})
    pairs = section.get("pairs", 10000)
    seeds = section.get("seeds", 5)
    mine_cfg = estimators.MineConfig(**section.get("mine", {}))
    disc_cfg = estimators.DiscriminatorConfig(**section.get("discriminator", {}))
    results = run_estimator_selftests(pairs, seeds, mine_cfg, disc_cfg, base_seed=args.seed)
    for check in results["checks"]:
        config = mine_cfg if check["name"].startswith("mine") else disc_cfg
        check["results"] = [
            estimators.result_document(value, seed, config,
                                       {"target": check["target"], "check": check["name"]})
            for seed, value in enumerate(check["estimates"])
        ]
    out_path = Path(args.out) / "estimator_selftest.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(results, sort_keys=True, indent=1))
    print(out_path)
    for check in results["checks"]:
        print(f"{'PASS' if check['pass'] else 'FAIL'} {check['name']} ({check['value']:+.4f})")
    return 0 if results["all_pass"] else 1


def run_estimator_selftests(pairs, seeds, mine_cfg, disc_cfg, base_seed: int = 0) -> dict:
    """Calibration targets: correlated/independent Gaussian MI and Gaussian KL."""
    rho = 0.5
    true_mi = -0.5 * math.log(1 - rho * rho)
    true_kl = 0.5 * (0.5 - 1.0 + math.log(2.0))
    checks = []

    def run_seeds(maker):
        values = []
        for k in range(seeds):
            values.append(maker(k))
        return float(np.mean(values)), values

    def mine_corr(k):
        rng = np.random.default_rng(pipeline.derive_seed(base_seed, "mine-corr", k))
        x = rng.standard_normal(pairs)
        y = rho * x + math.sqrt(1 - rho * rho) * rng.standard_normal(pairs)
        return estimators.mine_estimate(x, y, mine_cfg, seed=k)["mi_hat"]

    def mine_indep(k):
        rng = np.random.default_rng(pipeline.derive_seed(base_seed, "mine-indep", k))
        return estimators.mine_estimate(
            rng.standard_normal(pairs), rng.standard_normal(pairs), mine_cfg, seed=k
        )["mi_hat"]

    def dr_gauss(k):
        rng = np.random.default_rng(pipeline.derive_seed(base_seed, "dr-gauss", k))
        p = rng.standard_normal(pairs)
        q = math.sqrt(2.0) * rng.standard_normal(pairs)
        return estimators.density_ratio_kl(p, q, disc_cfg, seed=k)["kl_hat"]

    def dr_same(k):
        rng = np.random.default_rng(pipeline.derive_seed(base_seed, "dr-same", k))
        return estimators.density_ratio_kl(
            rng.standard_normal(pairs), rng.standard_normal(pairs), disc_cfg, seed=k
        )["kl_hat"]

    mean, values = run_seeds(mine_corr)
    checks.append({"name": "mine_gaussian_rho0.5", "value": mean - true_mi, "target": true_mi,
                   "estimates": values, "tolerance": 0.03, "pass": abs(mean - true_mi) <= 0.03})
    mean, values = run_seeds(mine_indep)
    checks.append({"name": "mine_independent", "value": mean, "target": 0.0,
                   "estimates": values, "tolerance": 0.02, "pass": abs(mean) <= 0.02})
    mean, values = run_seeds(dr_gauss)
    checks.append({"name": "density_ratio_gaussian", "value": mean - true_kl, "target": true_kl,
                   "estimates": values, "tolerance": 0.03, "pass": abs(mean - true_kl) <= 0.03})
    mean, values = run_seeds(dr_same)
    checks.append({"name": "density_ratio_identical", "value": mean, "target": 0.0,
                   "estimates": values, "tolerance": 0.02, "pass": abs(mean) <= 0.02})
    return {"pairs": pairs, "seeds": seeds, "checks": checks,
            "all_pass": all(c["pass"] for c in checks)}


COMMANDS = {
    "gaussian-sweep": _cmd_gaussian_sweep,
    "discrete-verify": _cmd_discrete_verify,
    "image-bound": _cmd_image_bound,
    "diameter": _cmd_diameter,
    "estimator-selftest": _cmd_estimator_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.overrides)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        return COMMANDS[args.command](args, config)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point.

Subcommands:
    run             full task-switching experiment for one condition
    probe           train, then record a sustained-activity probe
    lesion-scan     sweep connectivity probabilities
    export-weights  train, then dump all weight matrices

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config_file, resolve_config
from .experiment import (
    run_experiment,
    sustained_activity_probe,
    target_rf_correlation,
)
from .io import (
    RunManifest,
    export_raster,
    export_weight_image,
    export_weights_csv,
    write_manifest,
    write_summary,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pfcsnn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pfcsnn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--schedule", choices=["short", "long"])
        p.add_argument("--lesion", type=float, metavar="P",
                       help="connection keep-probability; 1.0 = full connectivity")
        p.add_argument("--trials", type=int, help="learning-block length")
        p.add_argument("--seed", type=int)
        p.add_argument("--data-dir", help="IDX dataset directory, or 'synthetic'")
        p.add_argument("--out", default="out", help="output directory")

    common(sub.add_parser("run", help="run one experiment condition"))
    p = sub.add_parser("probe", help="sustained-activity probe on a trained network")
    common(p)
    p.add_argument("--on-ms", type=float, help="stimulus-on duration")
    p.add_argument("--observe-ms", type=float, help="total observation window")
    p = sub.add_parser("lesion-scan", help="sweep lesion probabilities")
    common(p)
    p.add_argument("--p-values", default="1.0,0.5",
                   help="comma-separated connection probabilities")
    common(sub.add_parser("export-weights", help="train and dump weight matrices"))
    return parser


def _overrides_from_args(args) -> dict:
    overrides = {}
    if args.config:
        overrides.update(load_config_file(args.config))
    if args.schedule is not None:
        overrides["schedule"] = args.schedule
    if args.lesion is not None:
        if not 0.0 <= args.lesion <= 1.0:
            raise UsageError(f"--lesion must lie in [0, 1], got {args.lesion}")
        overrides["lesion_p"] = args.lesion
    if args.trials is not None:
        if args.trials <= 0:
            raise UsageError(f"--trials must be positive, got {args.trials}")
        overrides["n_trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "data_dir", None) is not None:
        overrides["data_dir"] = args.data_dir
    return overrides


def _finish(out: Path, summary, cfg, artifacts: dict, t0: float) -> None:
    manifest = RunManifest(
        config_snapshot=cfg.to_flat(), seed=cfg.seed, artifacts=dict(artifacts),
        tool_version=__version__, duration_s=time.perf_counter() - t0)
    if summary is not None:
        summary.artifacts = dict(artifacts)
        write_summary(summary, manifest, out / "summary.txt")
    write_manifest(manifest, out / "manifest.txt")


def _cmd_run(args) -> int:
    t0 = time.perf_counter()
    cfg = resolve_config(_overrides_from_args(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    result = run_experiment(cfg)
    net, assignment = result.net, result.assignment

    artifacts = {}
    corr, neuron = target_rf_correlation(net, result.stimuli.target, seed=cfg.seed, r_max=cfg.r_max)
    export_weight_image(net.input_mem, neuron, out / "rf_mem_target.pgm")
    artifacts["rf_mem_target"] = str(out / "rf_mem_target.pgm")
    export_weight_image(net.input_resp, assignment.n_t, out / "rf_resp_target.pgm")
    artifacts["rf_resp_target"] = str(out / "rf_resp_target.pgm")
    export_weight_image(net.input_resp, assignment.n_nt, out / "rf_resp_nontarget.pgm")
    artifacts["rf_resp_nontarget"] = str(out / "rf_resp_nontarget.pgm")

    _finish(out, result.summary, cfg, artifacts, t0)
    for cat in sorted(result.summary.accuracy):
        print(f"accuracy.{cat}={result.summary.accuracy[cat]:.4f}")
    print(f"rf correlation (memory neuron {neuron}): {corr:.3f}")
    print(f"wrote {out / 'summary.txt'}")
    return 0


def _cmd_probe(args) -> int:
    t0 = time.perf_counter()
    cfg = resolve_config(_overrides_from_args(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    result = run_experiment(cfg)
    on_ms = args.on_ms if args.on_ms is not None else cfg.probe_on_ms
    observe_ms = args.observe_ms if args.observe_ms is not None else cfg.probe_observe_ms
    probe = sustained_activity_probe(
        result.net, result.stimuli.target, on_ms=on_ms, observe_ms=observe_ms,
        seed=cfg.seed, r_max=cfg.r_max)

    artifacts = {"raster": str(out / "probe_raster.csv"), "rates": str(out / "probe_rates.csv")}
    export_raster(probe.raster(), out / "probe_raster.csv")
    lines = ["bin_start_ms,population_rate_hz"]
    for i, r in enumerate(probe.bin_rates):
        lines.append(f"{i * probe.bin_ms:.1f},{r:.4f}")
    (out / "probe_rates.csv").write_text("\n".join(lines) + "\n")

    _finish(out, None, cfg, artifacts, t0)
    on_rate = probe.rate_in(on_ms - 100.0, on_ms)
    post_rate = probe.rate_in(on_ms, on_ms + 100.0)
    print(f"population rate, last 100 ms of stimulus: {on_rate:.1f} spikes/s")
    print(f"population rate, first 100 ms after offset: {post_rate:.1f} spikes/s")
    print(f"wrote {out / 'probe_raster.csv'}")
    return 0


def _cmd_lesion_scan(args) -> int:
    t0 = time.perf_counter()
    try:
        p_values = [float(tok) for tok in args.p_values.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"--p-values must be comma-separated numbers: {exc}") from exc
    if not p_values or any(not 0.0 <= p <= 1.0 for p in p_values):
        raise UsageError("--p-values entries must lie in [0, 1]")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    base = _overrides_from_args(args)
    rows = ["p_connect," + ",".join(f"accuracy.{c}" for c in
                                    ("target", "non_target", "context_target", "context_non_target"))]
    cfg = None
    for p in p_values:
        cfg = resolve_config({**base, "lesion_p": p})
        result = run_experiment(cfg)
        acc = result.summary.accuracy
        rows.append(f"{p:g}," + ",".join(
            f"{acc.get(c, float('nan')):.4f}" for c in
            ("target", "non_target", "context_target", "context_non_target")))
        print(rows[-1])
    (out / "lesion_scan.csv").write_text("\n".join(rows) + "\n")
    _finish(out, None, cfg, {"scan": str(out / "lesion_scan.csv")}, t0)
    print(f"wrote {out / 'lesion_scan.csv'}")
    return 0


def _cmd_export_weights(args) -> int:
    t0 = time.perf_counter()
    cfg = resolve_config(_overrides_from_args(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    result = run_experiment(cfg)
    net = result.net
    artifacts = {}
    for name, proj in (("input_mem", net.input_mem), ("input_resp", net.input_resp),
                       ("mem_resp", net.mem_resp)):
        path = out / f"weights_{name}.csv"
        export_weights_csv(proj.weights, path)
        artifacts[f"weights_{name}"] = str(path)
    np.savetxt(out / "lesion_mask.csv", net.input_mem.active.astype(np.uint8),
               fmt="%d", delimiter=",")
    artifacts["lesion_mask"] = str(out / "lesion_mask.csv")

    _finish(out, None, cfg, artifacts, t0)
    print(f"wrote weight matrices to {out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "probe": _cmd_probe,
    "lesion-scan": _cmd_lesion_scan,
    "export-weights": _cmd_export_weights,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver.

Examples
--------
    lte-appsched run --preset paper-sec6 --unity-gain --policy app-aware --out out/
    lte-appsched compare --preset paper-sec6 --iters 50 --svg --out out/
    lte-appsched sweep --field rb_bandwidth --values 0.01,0.015,0.02 --out out/
    lte-appsched preset list
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import simulate as sim
from .scenario import PRESETS, ConfigError, ScenarioConfig, dump_config, load_config
from .scheduler import POLICIES
from .svg import write_trajectories

log = logging.getLogger("lte_appsched")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

# Scalar fields that ``sweep`` may vary, with their parsers.
SWEEPABLE = {
    "seed": int, "frames": int, "monte_carlo_iters": int, "r_floor": float, "area_m": float,
    "min_distance_m": float, "noise_w": float, "rb_bandwidth": float, "power_budget_w": float,
    "shadowing_std_db": float, "doppler_hz": float, "frame_duration_s": float, "num_sinusoids": int,
    "unity_snr": float, "alpha": float, "tol": float, "max_iters": int,
}


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", type=Path, metavar="PATH", help="YAML scenario file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario (default: paper-sec6)")
    p.add_argument("--policy", choices=POLICIES, help="scheduling policy (run only)")
    p.add_argument("--unity-gain", action="store_true", help="replace every channel gain by 1")
    p.add_argument("--power-control", action="store_true", help="optimize powers after scheduling")
    p.add_argument("--fixed-topology", action="store_true", help="share UE positions across replicas")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--frames", type=int, metavar="N")
    p.add_argument("--iters", type=int, metavar="N", help="Monte Carlo iterations")
    p.add_argument("--out", type=Path, default=Path("."), metavar="DIR", help="output directory")
    p.add_argument("--svg", action="store_true", help="also write an SVG chart of the trajectories")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lte-appsched", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one policy")
    _add_scenario_args(p)
    p = sub.add_parser("compare", help="simulate both policies on identical channels")
    _add_scenario_args(p)
    p = sub.add_parser("sweep", help="compare policies while varying one scalar field")
    _add_scenario_args(p)
    p.add_argument("--field", required=True, choices=sorted(SWEEPABLE))
    p.add_argument("--values", required=True, help="comma-separated values")

    p = sub.add_parser("preset", help="inspect built-in scenarios")
    psub = p.add_subparsers(dest="preset_command", required=True)
    psub.add_parser("list", help="list preset names")
    show = psub.add_parser("show", help="print a preset as YAML")
    show.add_argument("name", choices=sorted(PRESETS))
    return parser


def resolve_config(args) -> ScenarioConfig:
    """Base scenario from ``--config``/``--preset`` with command-line overrides."""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror or exc}") from None
        cfg = load_config(text)
    else:
        cfg = PRESETS[args.preset or "paper-sec6"]()
    changes = {}
    if args.unity_gain:
        changes["unity_gain"] = True
    if args.power_control:
        changes["power_control"] = True
    if args.fixed_topology:
        changes["fixed_topology"] = True
    for flag, name in (("seed", "seed"), ("frames", "frames"), ("iters", "monte_carlo_iters"),
                       ("policy", "policy")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[name] = value
    return cfg.replace(**changes) if changes else cfg


def _prepare_out(out: Path) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    return out


def _write_outputs(results, cfg: ScenarioConfig, out: Path, name: str, svg: bool) -> None:
    sim.write_csv(list(results.values()), out / f"{name}.csv")
    sim.write_summary(results, cfg, out / f"{name}_summary.csv")
    (out / f"{name}_config.yaml").write_text(dump_config(cfg), encoding="utf-8")
    if svg:
        title = "unity gain" if cfg.unity_gain else f"{cfg.monte_carlo_iters} Monte Carlo iterations"
        write_trajectories(results.values(), out / f"{name}.svg", title=title)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    out = _prepare_out(args.out)
    result = sim.run(cfg)
    results = {result.policy: result}
    _write_outputs(results, cfg, out, "run", args.svg)
    print(sim.format_summary(results, cfg))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = resolve_config(args)
    out = _prepare_out(args.out)
    results = sim.compare(cfg)
    _write_outputs(results, cfg, out, "compare", args.svg)
    print(sim.format_summary(results, cfg))
    return EXIT_OK


def parse_values(field: str, text: str) -> list:
    parse = SWEEPABLE[field]
    try:
        values = [parse(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values: cannot parse {text!r} as {parse.__name__} values for {field}") from None
    if not values:
        raise ConfigError("--values: no values given")
    return values


def cmd_sweep(args) -> int:
    base = resolve_config(args)
    values = parse_values(args.field, args.values)
    configs = [base.replace(**{args.field: v}) for v in values]  # validate all before running
    out = _prepare_out(args.out)
    rows = []
    for value, cfg in zip(values, configs):
        log.info("sweep %s=%s", args.field, value)
        results = sim.compare(cfg)
        for row in sim.summary_rows(results, cfg):
            rows.append({args.field: value, **row})
        print(f"{args.field}={value}: " + ", ".join(
            f"{p} sum U={r.final_utility.sum():.4f}" for p, r in results.items()))
    path = out / "sweep.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: f"{v:.12g}" if isinstance(v, float) else v for k, v in row.items()})
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.preset_command == "list":
        for name, factory in sorted(PRESETS.items()):
            print(f"{name}\t{(factory.__doc__ or '').strip().splitlines()[0]}")
    else:
        sys.stdout.write(dump_config(PRESETS[args.name]()))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "preset": cmd_preset}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"lte-appsched: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"lte-appsched: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

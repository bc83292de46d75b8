"""Command-line entry point."""

import argparse
import sys
from pathlib import Path

from .bench import (
    apply_overrides,
    default_config_text,
    write_variant_csvs,
    load_config,
    mesh_stats,
    run_experiment,
    write_manifest,
)


def _progress(row):
    print(
        f"[{row['experiment']}] {row['variant']:<14} "
        f"sigma_t={row['scalar']:<12.6g} c={row['scattering_ratio']:<8.6g} "
        f"rho={row['spectral_radius']:<10.4g} iters={row['n_iterations']:<4d} "
        f"{row['termination'] or row['status']}"
    )


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="polysn",
        description="Polytopic DG discrete-ordinates transport with "
        "interior-penalty diffusion acceleration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the experiment described by an INI config")
    run_p.add_argument("config", help="path to the INI config")
    run_p.add_argument("--out-dir", help="override the config's output directory")
    run_p.add_argument("--seed", type=int, help="override the mesh seed")
    run_p.add_argument("--threads", type=int, help="sweep worker threads")
    run_p.add_argument("--cap", type=int, help="iteration cap override")
    run_p.add_argument("--tol", type=float, help="relative-change tolerance override")

    stats_p = sub.add_parser("mesh-stats", help="mesh quality summary, no solves")
    stats_p.add_argument("config", help="path to the INI config")
    stats_p.add_argument("--seed", type=int, help="override the mesh seed")

    emit_p = sub.add_parser(
        "emit-default-config", help="write the baseline config (stdout or a file)"
    )
    emit_p.add_argument("path", nargs="?", help="target file; stdout when omitted")

    args = parser.parse_args(argv)

    if args.command == "emit-default-config":
        text = default_config_text()
        if args.path:
            Path(args.path).write_text(text)
            print(f"wrote {args.path}")
        else:
            sys.stdout.write(text)
        return 0

    config = load_config(args.config)
    if args.command == "mesh-stats":
        config = apply_overrides(config, seed=args.seed)
        for key, value in mesh_stats(config).items():
            print(f"{key}: {value}")
        return 0

    config = apply_overrides(
        config,
        out_dir=args.out_dir,
        seed=args.seed,
        threads=args.threads,
        cap=args.cap,
        tol=args.tol,
    )
    rows = run_experiment(config, progress=_progress)
    paths = write_variant_csvs(rows, config.out_dir, config.name)
    manifest = write_manifest(config, config.out_dir)
    for path in paths:
        print(f"wrote {path}")
    print(f"wrote {manifest}")
    failures = [r for r in rows if r["status"] != "ok"]
    if failures:
        print(f"{len(failures)} of {len(rows)} runs reported errors", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line driver: ``gpqe run|scan|gates|fci``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .ansatz import PoolSpec, build_ansatz
from .config import ConfigError, RunConfig, load_run_config, load_scan_config
from .hamio import Molecule
from .oracle import fci_ground_state
from .runner import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, _cso, execute, run_scan, write_outputs
from .simulator import compile

OUT_ENV = "GPQE_OUT_DIR"
DEFAULT_OUT = "gpqe-out"


def _out_dir(arg: str | None, configured: Path | None) -> Path:
    if arg:
        return Path(arg)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return configured if configured is not None else Path(DEFAULT_OUT)


def cmd_run(args) -> int:
    cfg = load_run_config(args.config).with_seed(args.seed)
    result = execute(cfg)
    out = _out_dir(args.out, cfg.output_dir)
    write_outputs(out, [result])
    print(result.summary)
    print(f"wrote {out / 'results.csv'}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_scan(args) -> int:
    scan = load_scan_config(args.config)
    if args.seed is not None:
        scan.points = [p.with_seed(args.seed) for p in scan.points]
    results = run_scan(scan, args.jobs)
    out = _out_dir(args.out, scan.output_dir)
    write_outputs(out, results)
    for r in results:
        print(r.summary)
    print(f"wrote {out / 'results.csv'} ({len(results)} rows)")
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOT_CONVERGED


def _ansatz_for(cfg: RunConfig):
    mol = Molecule.from_fcidump(cfg.fcidump_path)
    cso = _cso(cfg, mol) if cfg.level == "GENERALIZED" else ()
    spec = PoolSpec(cfg.level, cso, cfg.t2_first_order, cfg.t1_second_order, cfg.pairing)
    return mol, build_ansatz(mol, spec)


def cmd_gates(args) -> int:
    cfg = load_run_config(args.config)
    mol, build = _ansatz_for(cfg)
    summary = compile(build.ansatz.factors, mol.n_qubits).summary()
    summary.update(label=cfg.label, method=cfg.method, level=cfg.level, parameters=build.ansatz.counts(),
                   inert_scatterers=[str(s) for s in build.inert])
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_fci(args) -> int:
    cfg = load_run_config(args.config)
    mol = Molecule.from_fcidump(cfg.fcidump_path)
    ref = mol.reference
    e, _, sector = fci_ground_state(mol.hamiltonian, ref.n_alpha, ref.n_beta)
    print(json.dumps({"label": cfg.label, "E_FCI": e, "E_HF": ref.e_hf, "sector_dimension": len(sector)}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpqe", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver events")
    sub = parser.add_subparsers(dest="verb", required=True)
    for name, func, help_ in (
        ("run", cmd_run, "run one configuration"),
        ("scan", cmd_scan, "run a potential-energy scan"),
        ("gates", cmd_gates, "print the compiled-circuit summary of the configured ansatz"),
        ("fci", cmd_fci, "print the FCI (oracle) energy of the configured system"),
    ):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--config", required=True, help="TOML configuration file")
        if name in ("run", "scan"):
            p.add_argument("--out", help=f"output directory (default: ${OUT_ENV}, config output.dir, ./{DEFAULT_OUT})")
            p.add_argument("--seed", type=int, help="override the configured seed")
        if name == "scan":
            p.add_argument("--jobs", type=int, default=1, help="worker processes for scan points")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: config key '--seed': must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("error: config key '--jobs': must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

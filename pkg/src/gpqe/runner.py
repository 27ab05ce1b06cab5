"""Execute run configurations and write results.csv / trace.jsonl / summary.txt."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ansatz import PoolSpec, build_ansatz, default_cso
from .config import RunConfig, ScanConfig
from .hamio import Molecule, fixture_metadata
from .oracle import fci_ground_state
from .simulator import NoiseSpec, compile
from .solvers import DivergenceError, ResidualEngine, solve
from .solvers.noise import (
    CHEMICAL_ACCURACY,
    NoisyResidualEngine,
    gaussian_noise_study,
    noisy_pqe,
    noisy_vqe,
)
from .solvers.vqe import vqe_minimize

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# gpqe results schema_version={SCHEMA_VERSION}"
COLUMNS = (
    "label",
    "geometry",
    "method",
    "E_method",
    "E_FCI",
    "error",
    "chemically_accurate",
    "cnot_count",
    "iterations",
    "gershgorin_radius",
    "converged",
    "gaussian_mean",
    "gaussian_std",
    "status",
)

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED = 0, 1, 2


@dataclass
class RunResult:
    row: dict
    trace: list[dict] = field(default_factory=list)
    converged: bool = False
    summary: str = ""


def _geometry(cfg: RunConfig) -> float | None:
    sidecar = cfg.fcidump_path.with_suffix(".json")
    if sidecar.is_file():
        return float(json.loads(sidecar.read_text()).get("bond_length_angstrom", math.nan))
    try:
        return float(fixture_metadata(cfg.label)["bond_length_angstrom"])
    except (FileNotFoundError, KeyError):
        return None


def _cso(cfg: RunConfig, mol: Molecule) -> tuple[int, ...]:
    if isinstance(cfg.cso, str):
        return default_cso(mol.reference, cfg.cso)
    return tuple(cfg.cso)


def execute(cfg: RunConfig) -> RunResult:
    """Run one configuration; never raises for numerical failures."""
    mol = Molecule.from_fcidump(cfg.fcidump_path)
    ref = mol.reference
    e_fci, _, _ = fci_ground_state(mol.hamiltonian, ref.n_alpha, ref.n_beta)
    spec = PoolSpec(cfg.level, _cso(cfg, mol) if cfg.level == "GENERALIZED" else (),
                    cfg.t2_first_order, cfg.t1_second_order, cfg.pairing)
    build = build_ansatz(mol, spec)
    engine = ResidualEngine(mol, build.ansatz, build.manifold)
    circuit = compile(build.ansatz.factors, mol.n_qubits)
    mode = "GPQE" if build.ansatz.scatterers else "PQE"

    row = {c: "" for c in COLUMNS}
    geometry = _geometry(cfg)
    row.update(label=cfg.label, geometry="" if geometry is None else geometry, method=cfg.method,
               E_FCI=e_fci, cnot_count=circuit.cnot_count)
    trace: list[dict] = []
    noise = None if cfg.noise is None else NoiseSpec(cfg.noise.p1, cfg.noise.p2, cfg.seed)

    try:
        if cfg.method.startswith("VQE"):
            if noise is None or cfg.method == "VQE":
                res = vqe_minimize(engine.energy, np.zeros(engine.n_params), gtol=cfg.vqe_gtol, maxiter=cfg.vqe_maxiter)
                theta, energy, converged, iterations = res.theta, res.energy, res.converged, res.iterations
                trace = res.trace
            else:
                run, res = noisy_vqe(engine, noise, cfg.noise.trajectories, cfg.seed, maxiter=cfg.vqe_maxiter)
                judge = NoisyResidualEngine(engine, noise, cfg.noise.final_trajectories, cfg.seed + 1)
                theta, energy, converged, iterations = run.theta, judge.energy(run.theta), res.converged, res.iterations
                trace = run.trace
        elif noise is not None:
            run = noisy_pqe(engine, noise, cfg.noise.trajectories, cfg.noise.sweeps, cfg.seed, cfg.scatterer_denominator)
            judge = NoisyResidualEngine(engine, noise, cfg.noise.final_trajectories, cfg.seed + 1)
            theta, energy, converged, iterations = run.theta, judge.energy(run.theta), True, run.iterations
            trace = run.trace
        else:
            rep = solve(engine, mode, cfg.tolerance, cfg.max_sweeps, cfg.diis, cfg.diis_depth,
                        cfg.scatterer_denominator)
            theta, energy, converged, iterations = rep.theta, rep.energy, rep.converged, rep.iterations
            trace = rep.trace
    except DivergenceError as exc:
        row.update(status=f"diverged: {exc}", converged=False, iterations=len(exc.trace))
        return RunResult(row, exc.trace, False, f"{cfg.label}: diverged ({exc})")

    radius = engine.gershgorin_radius(engine.hbar_on_reference(theta))
    error = energy - e_fci
    row.update(E_method=energy, error=error, chemically_accurate=abs(error) <= CHEMICAL_ACCURACY,
               iterations=iterations, gershgorin_radius=radius, converged=converged,
               status="ok" if converged else "not converged")
    if cfg.gaussian is not None:
        mean, std = gaussian_noise_study(engine.energy, theta, cfg.gaussian.sd, cfg.gaussian.n_samples, cfg.seed)
        row.update(gaussian_mean=mean, gaussian_std=std)
    for rec in trace:
        rec.setdefault("gershgorin_radius", None)
        rec["label"] = cfg.label
        rec["method"] = cfg.method
    counts = build.ansatz.counts()
    summary = (
        f"{cfg.label} [{cfg.method}] E = {energy:.10f}  E_FCI = {e_fci:.10f}  "
        f"error = {error * 1e3:+.4f} mEh  {'converged' if converged else 'NOT converged'} "
        f"after {iterations} iterations\n"
        f"  ansatz {counts}, inert scatterers {len(build.inert)}, CNOTs {circuit.cnot_count}, "
        f"Gershgorin radius {radius:.3e}"
    )
    if cfg.gaussian is not None:
        summary += (
            f"\n  gaussian study (sd={cfg.gaussian.sd:g}, n={cfg.gaussian.n_samples}): "
            f"mean error {(mean - e_fci) * 1e3:+.4f} mEh, std {std * 1e3:.4f} mEh"
        )
    return RunResult(row, trace, converged, summary)


def _safe_execute(cfg: RunConfig) -> RunResult:
    try:
        return execute(cfg)
    except Exception as exc:  # recorded per row; a scan never aborts
        log.debug("run %s failed:\n%s", cfg.label, traceback.format_exc())
        row = {c: "" for c in COLUMNS}
        row.update(label=cfg.label, method=cfg.method, status=f"failed: {type(exc).__name__}: {exc}", converged=False)
        geometry = _geometry(cfg)
        row["geometry"] = "" if geometry is None else geometry
        return RunResult(row, [], False, f"{cfg.label}: failed ({exc})")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA_LINE + "\n")
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k, "")) for k in COLUMNS})
    return buf.getvalue()


def read_csv(path: str | Path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# gpqe results schema_version="):
        raise ValueError(f"{path} has no schema header")
    return list(csv.DictReader(lines[1:]))


def write_outputs(out_dir: Path, results: Sequence[RunResult], extra_summary: Sequence[str] = ()) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_text(render_csv([r.row for r in results]))
    with open(out_dir / "trace.jsonl", "w") as fh:
        for r in results:
            for rec in r.trace:
                fh.write(json.dumps(rec) + "\n")
    lines = [r.summary for r in results] + list(extra_summary)
    (out_dir / "summary.txt").write_text("\n".join(lines) + ("\n" if lines else ""))


def _sort_key(item: tuple[int, RunResult]):
    k, res = item
    g = res.row.get("geometry")
    return (0, float(g), k) if g not in ("", None) and not math.isnan(float(g)) else (1, 0.0, k)


def run_scan(scan: ScanConfig, jobs: int = 1) -> list[RunResult]:
    """Run every point (optionally in worker processes) and order rows by geometry."""
    if jobs > 1 and len(scan.points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_safe_execute, scan.points))
    else:
        results = [_safe_execute(cfg) for cfg in scan.points]
    for k, err in scan.errors:
        row = {c: "" for c in COLUMNS}
        row.update(label=f"point[{k}]", status=f"config error: {err}", converged=False)
        results.append(RunResult(row, [], False, f"point[{k}]: {err}"))
    return [r for _, r in sorted(enumerate(results), key=_sort_key)]

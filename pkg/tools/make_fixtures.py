"""Generate the bundled FCIDUMP fixtures (run offline; needs pyscf).

Each fixture is written as ``<label>.fcidump`` plus a ``<label>.json``
sidecar recording geometry, basis, frozen-core settings, the Bohr constant
used by pyscf and reference HF/FCI energies from pyscf itself.

    python tools/make_fixtures.py src/gpqe/data
"""

import json
import sys
from pathlib import Path

import numpy as np
import pyscf
from pyscf import ao2mo, fci, gto, scf
from pyscf.lib import param
from pyscf.tools import fcidump

BASIS = "sto-3g"


def h2(r):
    return [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, r))]


def h4(r):
    return [("H", (0.0, 0.0, k * r)) for k in range(4)]


def bh(r):
    return [("B", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, r))]


def beh2(r):
    return [("H", (0.0, 0.0, -r)), ("Be", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, r))]


SYSTEMS = {
    "h2": (h2, [0.735], 0),
    "h4": (h4, [0.75, 1.0, 1.25, 1.5, 1.75, 2.0], 0),
    "bh": (bh, [1.0, 1.4, 1.8, 2.25, 2.5, 2.8], 1),
    "beh2": (beh2, [1.0, 1.25, 1.5, 1.75, 2.0, 2.5], 1),
}


def build(geometry, n_frozen):
    mol = gto.M(atom=geometry, basis=BASIS, unit="Angstrom", symmetry=False, verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.max_cycle = 200
    mf.kernel()
    if not mf.converged:
        mf = mf.newton()
        mf.kernel()
    assert mf.converged

    mo = mf.mo_coeff
    core = mo[:, :n_frozen]
    act = mo[:, n_frozen:]
    hcore = mf.get_hcore()
    ecore = mol.energy_nuc()
    if n_frozen:
        dm_core = 2.0 * core @ core.T
        vj, vk = mf.get_jk(mol, dm_core)
        veff = vj - 0.5 * vk
        ecore += np.einsum("ij,ji", dm_core, hcore + 0.5 * veff)
        h1 = act.T @ (hcore + veff) @ act
    else:
        h1 = act.T @ hcore @ act
    norb = act.shape[1]
    eri = ao2mo.restore(1, ao2mo.kernel(mol, act), norb)
    nelec = mol.nelectron - 2 * n_frozen

    e_fci, _ = fci.direct_spin1.kernel(h1, eri, norb, nelec, ecore=ecore)
    return mol, mf, h1, eri, ecore, norb, nelec, e_fci


def main(outdir):
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (geom_fn, distances, n_frozen) in SYSTEMS.items():
        for r in distances:
            label = f"{name}_{r:.3f}"
            geometry = geom_fn(r)
            mol, mf, h1, eri, ecore, norb, nelec, e_fci = build(geometry, n_frozen)
            fcidump.from_integrals(
                str(out / f"{label}.fcidump"), h1, eri, norb, nelec, nuc=ecore, ms=0, tol=1e-14
            )
            meta = {
                "label": label,
                "molecule": name.upper(),
                "bond_length_angstrom": r,
                "geometry_angstrom": [[a, list(xyz)] for a, xyz in geometry],
                "basis": BASIS,
                "frozen_core_spatial_orbitals": n_frozen,
                "orbitals": "canonical RHF",
                "bohr_angstrom": param.BOHR,
                "nuclear_repulsion": mol.energy_nuc(),
                "e_hf": mf.e_tot,
                "e_fci": e_fci,
                "generator": f"pyscf {pyscf.__version__}",
            }
            (out / f"{label}.json").write_text(json.dumps(meta, indent=2) + "\n")
            print(f"{label:12s} norb={norb} nelec={nelec} E_HF={mf.e_tot:.8f} E_FCI={e_fci:.8f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/gpqe/data")

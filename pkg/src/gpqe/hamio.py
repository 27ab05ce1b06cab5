"""FCIDUMP ingestion, spinorbital Hamiltonian and the Hartree-Fock reference."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np

from .fermion import jordan_wigner_sum
from .pauli import QubitOperator


class FCIDumpError(ValueError):
    pass


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class MolecularIntegrals:
    n_spatial: int
    n_elec: int
    ms2: int
    core_energy: float
    h1: np.ndarray
    eri: np.ndarray  # chemists' (pq|rs)

    @property
    def n_alpha(self) -> int:
        return (self.n_elec + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_elec - self.ms2) // 2


@dataclass(frozen=True)
class SpinOrbitalHamiltonian:
    n_so: int
    h: np.ndarray
    v_antisym: np.ndarray  # <pq||rs>
    core_energy: float

    def second_quantized(self, tol: float = 1e-14):
        """Yield ``(coeff, ops)`` products of H (unique p<q, r<s two-body terms)."""
        n = self.n_so
        yield self.core_energy, ()
        for p, q in product(range(n), repeat=2):
            if abs(self.h[p, q]) > tol:
                yield self.h[p, q], ((p, True), (q, False))
        for p in range(n):
            for q in range(p + 1, n):
                for r in range(n):
                    for s in range(r + 1, n):
                        v = self.v_antisym[p, q, r, s]
                        if abs(v) > tol:
                            yield v, ((p, True), (q, True), (s, False), (r, False))

    def qubit_operator(self) -> QubitOperator:
        return jordan_wigner_sum(self.second_quantized())


@dataclass(frozen=True)
class HFReference:
    occupation: int
    eps: np.ndarray
    e_hf: float
    n_alpha: int
    n_beta: int

    @property
    def n_elec(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def occupied(self) -> list[int]:
        return [p for p in range(len(self.eps)) if (self.occupation >> p) & 1]

    @property
    def virtual(self) -> list[int]:
        return [p for p in range(len(self.eps)) if not (self.occupation >> p) & 1]

    def homo(self) -> list[int]:
        """Spinorbitals of the highest doubly-occupied-or-not spatial orbital."""
        q = max(self.occupied) >> 1
        return [2 * q, 2 * q + 1]

    def lumo(self) -> list[int]:
        q = (min(self.virtual) >> 1)
        return [2 * q, 2 * q + 1]


_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(text: str, first_line: int) -> dict[str, str]:
    body = re.sub(r"^\s*&\w*", "", text.strip())
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.IGNORECASE).replace("\n", " ")
    keys = list(_HEADER_KEY.finditer(body))
    out: dict[str, str] = {}
    for k, m in enumerate(keys):
        stop = keys[k + 1].start() if k + 1 < len(keys) else len(body)
        out[m.group(1).upper()] = body[m.end():stop].strip().strip(",").strip()
    for key in ("NORB", "NELEC", "MS2"):
        if key not in out:
            raise FCIDumpError(f"line {first_line}: FCIDUMP header is missing {key}")
        try:
            int(out[key])
        except ValueError:
            raise FCIDumpError(f"line {first_line}: header key {key} is not an integer: {out[key]!r}")
    return out


def parse_fcidump(text: str) -> MolecularIntegrals:
    lines = text.splitlines()
    if not lines or not lines[0].lstrip().startswith("&"):
        raise FCIDumpError("line 1: FCIDUMP must start with a '&FCI' namelist header")
    end = None
    for k, line in enumerate(lines):
        stripped = line.strip().upper()
        if stripped.startswith("&END") or stripped == "/" or stripped.endswith("&END"):
            end = k
            break
    if end is None:
        raise FCIDumpError("line 1: FCIDUMP header is not terminated by &END or /")
    header = _parse_header("\n".join(lines[: end + 1]), 1)
    norb = int(header["NORB"])
    nelec = int(header["NELEC"])
    ms2 = int(header["MS2"])
    if norb <= 0 or nelec < 0:
        raise FCIDumpError(f"line 1: nonsensical header NORB={norb} NELEC={nelec}")

    h1 = np.zeros((norb, norb))
    eri = np.zeros((norb, norb, norb, norb))
    core = 0.0
    for lineno, line in enumerate(lines[end + 1:], start=end + 2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FCIDumpError(f"line {lineno}: expected 'value p q r s', got {line!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            p, q, r, s = (int(v) for v in parts[1:])
        except ValueError:
            raise FCIDumpError(f"line {lineno}: cannot parse {line!r}")
        if not np.isfinite(value):
            raise FCIDumpError(f"line {lineno}: non-finite integral value")
        for idx in (p, q, r, s):
            if idx < 0 or idx > norb:
                raise IndexError(f"line {lineno}: orbital index {idx} outside [1, {norb}]")
        if p == q == r == s == 0:
            core = value
        elif r == 0 and s == 0:
            if p == 0 or q == 0:
                raise IndexError(f"line {lineno}: orbital index 0 outside [1, {norb}]")
            h1[p - 1, q - 1] = h1[q - 1, p - 1] = value
        else:
            if 0 in (p, q, r, s):
                raise IndexError(f"line {lineno}: orbital index 0 outside [1, {norb}]")
            p, q, r, s = p - 1, q - 1, r - 1, s - 1
            for a, b, c, d in (
                (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
            ):
                eri[a, b, c, d] = value
    return MolecularIntegrals(norb, nelec, ms2, core, h1, eri)


def read_fcidump(path: str | Path) -> MolecularIntegrals:
    return parse_fcidump(Path(path).read_text())


def write_fcidump(ints: MolecularIntegrals, tol: float = 0.0) -> str:
    """Serialize with full ``repr`` precision so re-parsing is exact."""
    n = ints.n_spatial
    lines = [f"&FCI NORB={n},NELEC={ints.n_elec},MS2={ints.ms2},", "&END"]
    for p in range(n):
        for q in range(p + 1):
            for r in range(n):
                for s in range(r + 1):
                    if p * (p + 1) // 2 + q < r * (r + 1) // 2 + s:
                        continue
                    v = ints.eri[p, q, r, s]
                    if abs(v) > tol:
                        lines.append(f"{float(v)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p in range(n):
        for q in range(p + 1):
            v = ints.h1[p, q]
            if abs(v) > tol:
                lines.append(f"{float(v)!r} {p + 1} {q + 1} 0 0")
    lines.append(f"{float(ints.core_energy)!r} 0 0 0 0")
    return "\n".join(lines) + "\n"


def spinorbitalize(ints: MolecularIntegrals) -> SpinOrbitalHamiltonian:
    n = ints.n_spatial
    nso = 2 * n
    sp = np.arange(nso) >> 1
    sg = np.arange(nso) & 1
    same = (sg[:, None] == sg[None, :]).astype(float)
    h = ints.h1[np.ix_(sp, sp)] * same
    # physicists' <pq|rs> = (pr|qs) delta(s_p, s_r) delta(s_q, s_s)
    chem = ints.eri[np.ix_(sp, sp, sp, sp)]
    direct = chem.transpose(0, 2, 1, 3) * same[:, None, :, None] * same[None, :, None, :]
    v = direct - direct.transpose(0, 1, 3, 2)
    return SpinOrbitalHamiltonian(nso, h, v, ints.core_energy)


def hartree_fock_reference(ham: SpinOrbitalHamiltonian, n_alpha: int, n_beta: int) -> HFReference:
    n_spatial = ham.n_so // 2
    if n_alpha > n_spatial or n_beta > n_spatial or min(n_alpha, n_beta) < 0:
        raise CapacityError(
            f"cannot place {n_alpha} alpha / {n_beta} beta electrons in {n_spatial} spatial orbitals"
        )
    occ = [2 * q for q in range(n_alpha)] + [2 * q + 1 for q in range(n_beta)]
    occupation = sum(1 << p for p in occ)
    occ_idx = np.array(sorted(occ), dtype=int)
    v_oo = ham.v_antisym[:, occ_idx][:, :, :, occ_idx]
    eps = np.diag(ham.h) + np.einsum("pipi->p", v_oo)
    e_hf = (
        ham.core_energy
        + np.trace(ham.h[np.ix_(occ_idx, occ_idx)])
        + 0.5 * np.einsum("ijij->", v_oo[occ_idx][:, :, occ_idx])
    )
    return HFReference(occupation, np.asarray(eps, dtype=float), float(e_hf), n_alpha, n_beta)


@dataclass(frozen=True)
class Molecule:
    """Everything derived from one FCIDUMP: integrals, H, reference, qubit H."""

    integrals: MolecularIntegrals
    hamiltonian: SpinOrbitalHamiltonian
    reference: HFReference
    qubit_hamiltonian: QubitOperator
    label: str = ""

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_so

    @classmethod
    def from_integrals(cls, ints: MolecularIntegrals, label: str = "") -> Molecule:
        ham = spinorbitalize(ints)
        ref = hartree_fock_reference(ham, ints.n_alpha, ints.n_beta)
        return cls(ints, ham, ref, ham.qubit_operator(), label)

    @classmethod
    def from_fcidump(cls, path: str | Path) -> Molecule:
        path = Path(path)
        return cls.from_integrals(read_fcidump(path), path.stem)


def data_dir() -> Path:
    return Path(str(resources.files("gpqe") / "data"))


def fixture_path(label: str) -> Path:
    path = data_dir() / f"{label}.fcidump"
    if not path.exists():
        raise FileNotFoundError(f"no bundled fixture named {label!r}")
    return path


def fixture_metadata(label: str) -> dict:
    return json.loads((data_dir() / f"{label}.json").read_text())


def list_fixtures(prefix: str = "") -> list[str]:
    return sorted(p.stem for p in data_dir().glob(f"{prefix}*.fcidump"))

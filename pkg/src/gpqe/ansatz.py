"""Operator pools: dUCC excitations, scatterers, perturbative screening, assembly."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .fermion import (
    ContractedManifold,
    Excitation,
    Generator,
    Scatterer,
    adjoint_string,
    apply_string,
    build_contracted_manifold,
    excitation_between,
    spatial,
    spin,
)
from .hamio import HFReference, Molecule, SpinOrbitalHamiltonian

log = logging.getLogger(__name__)

DEGENERATE_D = 1e-8
LEVEL_SHIFT = 1e-2

LEVELS = ("SD", "SDT", "GENERALIZED")
PAIRINGS = ("quasi", "creation", "none")


class AssemblyError(ValueError):
    pass


def mp_denominator(gen: Generator, eps: np.ndarray, level_shift: bool = True) -> float:
    """Sum of eps over destroyed spinorbitals minus the sum over created ones.

    With ``level_shift`` a near-zero denominator is replaced by
    ``sign(D) * 1e-2`` (negative when D is exactly zero).
    """
    d = float(sum(eps[p] for p in gen.destroyed) - sum(eps[p] for p in gen.created))
    if level_shift and abs(d) < DEGENERATE_D:
        shifted = LEVEL_SHIFT if d > 0 else -LEVEL_SHIFT
        log.info("level shift for %s: D=%.3e -> %.3e", gen, d, shifted)
        return shifted
    return d


def two_body_integral(gen: Generator, ham: SpinOrbitalHamiltonian) -> float:
    """``<pq||rs>`` for a string ``a+_p a+_q a_s a_r``."""
    (p, _), (q, _), (s, _), (r, _) = gen.ops
    return float(ham.v_antisym[p, q, r, s])


def first_order_estimate(gen: Generator, ham: SpinOrbitalHamiltonian, eps: np.ndarray) -> float:
    d = mp_denominator(gen, eps, level_shift=False)
    if abs(d) < DEGENERATE_D:
        return np.inf
    return two_body_integral(gen, ham) / d


@dataclass(frozen=True)
class PoolSpec:
    level: str = "SD"
    cso: tuple[int, ...] = ()
    t2_first_order: float = 1e-5
    t1_second_order: float = 1e-6
    pairing: str = "quasi"

    def __post_init__(self):
        object.__setattr__(self, "cso", tuple(sorted(self.cso)))
        if self.level not in LEVELS:
            raise ValueError(f"pool level must be one of {LEVELS}, got {self.level!r}")
        if self.pairing not in PAIRINGS:
            raise ValueError(f"pairing must be one of {PAIRINGS}, got {self.pairing!r}")
        if self.level == "GENERALIZED" and not self.cso:
            raise ValueError("GENERALIZED pools need a nonempty cso")
        if any(p < 0 for p in self.cso):
            raise ValueError(f"negative cso index in {self.cso}")


@dataclass(frozen=True)
class AnsatzSpec:
    """Ordered factors; slot ``k`` of the parameter vector belongs to ``factors[k]``."""

    factors: tuple[Generator, ...]

    def __post_init__(self):
        if len(set(self.factors)) != len(self.factors):
            raise AssemblyError("a generator appears more than once in the ansatz")
        rank = [_block(g) for g in self.factors]
        if rank != sorted(rank):
            raise AssemblyError("factors must be ordered singles, doubles, triples, scatterers")

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def excitations(self) -> list[Excitation]:
        return [g for g in self.factors if isinstance(g, Excitation)]

    @property
    def scatterers(self) -> list[Scatterer]:
        return [g for g in self.factors if isinstance(g, Scatterer)]

    def of_rank(self, rank: int) -> list[Excitation]:
        return [g for g in self.excitations if g.rank == rank]

    def with_theta(self, theta: Sequence[float]) -> list[tuple[Generator, float]]:
        return list(zip(self.factors, theta))

    def counts(self) -> dict[str, int]:
        return {
            "singles": len(self.of_rank(1)),
            "doubles": len(self.of_rank(2)),
            "triples": len(self.of_rank(3)),
            "scatterers": len(self.scatterers),
        }


def _block(gen: Generator) -> int:
    return 4 if isinstance(gen, Scatterer) else gen.rank


def build_excitation_pool(ref: HFReference, level: str) -> list[Excitation]:
    if level not in ("SD", "SDT"):
        raise ValueError(f"excitation pools are SD or SDT, got {level!r}")
    occ, virt = ref.occupied, ref.virtual
    max_rank = 2 if level == "SD" else 3
    pool = []
    for rank in range(1, max_rank + 1):
        for o in combinations(occ, rank):
            so = sum(map(spin, o))
            for v in combinations(virt, rank):
                if sum(map(spin, v)) == so:
                    pool.append(Excitation(o, v))
    return sorted(pool, key=lambda e: (e.rank, e.occ, e.virt))


def _warn_degenerate(gen: Generator, d: float) -> None:
    log.warning("degenerate denominator %.2e for %s; operator kept", d, gen)


def screen_doubles(ham: SpinOrbitalHamiltonian, ref: HFReference, pool: Sequence[Excitation], t: float) -> list[Excitation]:
    kept = []
    for exc in pool:
        if exc.rank != 2:
            raise ValueError(f"screen_doubles got a rank-{exc.rank} excitation")
        d = mp_denominator(exc, ref.eps, level_shift=False)
        if abs(d) < DEGENERATE_D:
            _warn_degenerate(exc, d)
            kept.append(exc)
        elif abs(two_body_integral(exc, ham) / d) > t:
            kept.append(exc)
    return kept


def _paired(p: int, q: int) -> bool:
    return spatial(p) == spatial(q) and spin(p) != spin(q)


def enumerate_scatterers(ref: HFReference, cso: Sequence[int], pairing: str = "quasi") -> list[Scatterer]:
    """All VAC-satisfying Type-1 scatterers through the CSO spinorbitals.

    ``pairing`` selects which pair of operators must share a spatial orbital:
    ``quasi`` pairs the two quasi-particle creators (a_j a_i for hole type,
    a+_a a+_b for particle type), ``creation`` pairs the two creation
    operators literally, ``none`` applies no restriction.
    """
    occ, virt = ref.occupied, ref.virtual
    occ_set = set(occ)
    out = []
    for m in sorted(set(cso) & occ_set):
        for i, j in combinations([o for o in occ if o != m], 2):
            for a in virt:
                if spin(a) + spin(m) != spin(i) + spin(j):
                    continue
                if pairing == "quasi" and not _paired(i, j):
                    continue
                if pairing == "creation" and not _paired(a, m):
                    continue
                out.append(Scatterer("hole", (a, m), (j, i)))
    for e in sorted(set(cso) - occ_set):
        for i in occ:
            for a, b in combinations([v for v in virt if v != e], 2):
                if spin(a) + spin(b) != spin(e) + spin(i):
                    continue
                if pairing in ("quasi", "creation") and not _paired(a, b):
                    continue
                out.append(Scatterer("particle", (a, b), (e, i)))
    return out


def build_scatterer_pool(
    ham: SpinOrbitalHamiltonian,
    ref: HFReference,
    cso: Sequence[int],
    t: float,
    pairing: str = "quasi",
) -> list[Scatterer]:
    n_so = len(ref.eps)
    for p in cso:
        if not 0 <= p < n_so:
            raise ValueError(f"cso index {p} outside [0, {n_so})")
    kept = []
    for s in enumerate_scatterers(ref, cso, pairing):
        assert apply_string(s.ops, ref.occupation) is None, f"{s} violates VAC"
        d = mp_denominator(s, ref.eps, level_shift=False)
        if abs(d) < DEGENERATE_D:
            _warn_degenerate(s, d)
            kept.append(s)
        elif abs(two_body_integral(s, ham) / d) > t:
            kept.append(s)
    return sorted(kept)


def singles_estimates(
    ham: SpinOrbitalHamiltonian,
    ref: HFReference,
    doubles: Sequence[Excitation],
    scatterers: Sequence[Scatterer],
) -> dict[Excitation, float]:
    """Second-order single amplitudes ``sum s V_alpha V_I / (D_K D_I)``.

    The pair ``(alpha, I)`` contributes to single ``K`` when the scatterer's
    adjoint de-excites the double down to ``K``:
    ``Y_alpha^dagger Y_I |ref> = s |phi_K>``.
    """
    est: dict[Excitation, float] = {}
    for dbl in doubles:
        first = apply_string(dbl.ops, ref.occupation)
        det_i, s_i = first
        v_i = two_body_integral(dbl, ham)
        d_i = mp_denominator(dbl, ref.eps)
        for alpha in scatterers:
            hit = apply_string(adjoint_string(alpha.ops), det_i)
            if hit is None:
                continue
            det_k, s_a = hit
            if bin(det_k ^ ref.occupation).count("1") != 2:
                continue
            single = excitation_between(ref.occupation, det_k)
            _, s_k = apply_string(single.ops, ref.occupation)
            d_k = mp_denominator(single, ref.eps)
            val = s_i * s_a * s_k * two_body_integral(alpha, ham) * v_i / (d_k * d_i)
            est[single] = est.get(single, 0.0) + val
    return est


def screen_singles(
    ham: SpinOrbitalHamiltonian,
    ref: HFReference,
    doubles: Sequence[Excitation],
    scatterers: Sequence[Scatterer],
    t: float,
) -> list[Excitation]:
    kept = []
    for single, val in singles_estimates(ham, ref, doubles, scatterers).items():
        d = mp_denominator(single, ref.eps, level_shift=False)
        if abs(d) < DEGENERATE_D:
            _warn_degenerate(single, d)
            kept.append(single)
        elif abs(val) > t:
            kept.append(single)
    return sorted(kept)


def assemble(
    singles: Sequence[Excitation] = (),
    doubles: Sequence[Excitation] = (),
    scatterers: Sequence[Scatterer] = (),
    triples: Sequence[Excitation] = (),
) -> AnsatzSpec:
    blocks = [sorted(singles), sorted(doubles), sorted(triples), sorted(scatterers)]
    factors = tuple(g for block in blocks for g in block)
    if len(set(factors)) != len(factors):
        dup = next(g for g in factors if factors.count(g) > 1)
        raise AssemblyError(f"duplicate generator {dup}")
    return AnsatzSpec(factors)


@dataclass
class AnsatzBuild:
    """An assembled ansatz plus the scatterer bookkeeping that produced it."""

    ansatz: AnsatzSpec
    manifold: ContractedManifold = field(default_factory=ContractedManifold)
    spec: PoolSpec | None = None

    @property
    def inert(self) -> list[Scatterer]:
        return self.manifold.inert


def build_ansatz(mol: Molecule, spec: PoolSpec) -> AnsatzBuild:
    ham, ref = mol.hamiltonian, mol.reference
    if spec.level in ("SD", "SDT"):
        pool = build_excitation_pool(ref, spec.level)
        by_rank = {r: [e for e in pool if e.rank == r] for r in (1, 2, 3)}
        ansatz = assemble(by_rank[1], by_rank[2], triples=by_rank[3])
        return AnsatzBuild(ansatz, spec=spec)

    full = build_excitation_pool(ref, "SD")
    doubles = screen_doubles(ham, ref, [e for e in full if e.rank == 2], spec.t2_first_order)
    scatterers = build_scatterer_pool(ham, ref, spec.cso, spec.t2_first_order, spec.pairing)
    manifold = build_contracted_manifold(scatterers, doubles, ref.occupation)
    if manifold.inert:
        log.info("inert scatterers (no contractible double): %s", ", ".join(map(str, manifold.inert)))
    active = manifold.scatterers
    singles = screen_singles(ham, ref, doubles, active, spec.t1_second_order)
    return AnsatzBuild(assemble(singles, doubles, active), manifold, spec)


def default_cso(ref: HFReference, which: str = "homo-lumo") -> tuple[int, ...]:
    """CSO spinorbitals by name: ``homo-lumo`` or ``homo-homo1``."""
    homo = ref.homo()
    if which == "homo-lumo":
        return tuple(homo + ref.lumo())
    if which == "homo-homo1":
        return tuple(sorted([homo[0] - 2, homo[1] - 2] + homo))
    raise ValueError(f"unknown cso preset {which!r}")

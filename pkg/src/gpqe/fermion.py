"""Second-quantized generators, Jordan-Wigner encoding and the contracted manifold.

Spinorbitals are interleaved: ``2q`` is alpha and ``2q+1`` is beta for spatial
orbital ``q``.  An operator string is a sequence of ``(index, dagger)`` pairs
written left to right, so it acts on a ket right to left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .pauli import QubitOperator, parity_table, popcount

OpString = tuple[tuple[int, bool], ...]


def spin(p: int) -> int:
    return p & 1


def spatial(p: int) -> int:
    return p >> 1


@dataclass(frozen=True, order=True)
class Excitation:
    """Hole-particle excitation ``a+_a a+_b ... a_j a_i`` (occ/virt ascending)."""

    occ: tuple[int, ...]
    virt: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "occ", tuple(self.occ))
        object.__setattr__(self, "virt", tuple(self.virt))
        if len(self.occ) != len(self.virt) or not 1 <= len(self.occ) <= 3:
            raise ValueError(f"bad excitation rank: {self.occ} -> {self.virt}")
        if list(self.occ) != sorted(set(self.occ)) or list(self.virt) != sorted(set(self.virt)):
            raise ValueError(f"excitation indices must be strictly ascending: {self}")
        if set(self.occ) & set(self.virt):
            raise ValueError(f"occ and virt overlap: {self}")
        if sum(map(spin, self.occ)) != sum(map(spin, self.virt)):
            raise ValueError(f"excitation changes S_z: {self}")

    @property
    def rank(self) -> int:
        return len(self.occ)

    @cached_property
    def ops(self) -> OpString:
        return tuple((a, True) for a in self.virt) + tuple((i, False) for i in reversed(self.occ))

    @property
    def created(self) -> tuple[int, ...]:
        return self.virt

    @property
    def destroyed(self) -> tuple[int, ...]:
        return self.occ

    def __str__(self) -> str:
        return f"t({','.join(map(str, self.occ))}->{','.join(map(str, self.virt))})"


@dataclass(frozen=True, order=True)
class Scatterer:
    """Two-body generator with one quasi-orbital destruction.

    hole:     a+_a a+_m a_j a_i   (create=(a, m), destroy=(j, i), m occupied)
    particle: a+_a a+_b a_e a_i   (create=(a, b), destroy=(e, i), e virtual)
    """

    kind: str
    create: tuple[int, int]
    destroy: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "create", tuple(self.create))
        object.__setattr__(self, "destroy", tuple(self.destroy))
        if self.kind not in ("hole", "particle"):
            raise ValueError(f"scatterer kind must be 'hole' or 'particle', got {self.kind!r}")
        if len(set(self.create)) != 2 or len(set(self.destroy)) != 2:
            raise ValueError(f"repeated index in scatterer {self}")
        if set(self.create) & set(self.destroy):
            raise ValueError(f"scatterer creates and destroys the same spinorbital: {self}")
        if sum(map(spin, self.create)) != sum(map(spin, self.destroy)):
            raise ValueError(f"scatterer changes S_z: {self}")

    @property
    def cso_index(self) -> int:
        return self.create[1] if self.kind == "hole" else self.destroy[0]

    @property
    def rank(self) -> int:
        return 2

    @cached_property
    def ops(self) -> OpString:
        return (
            (self.create[0], True),
            (self.create[1], True),
            (self.destroy[0], False),
            (self.destroy[1], False),
        )

    @property
    def created(self) -> tuple[int, ...]:
        return self.create

    @property
    def destroyed(self) -> tuple[int, ...]:
        return self.destroy

    def __str__(self) -> str:
        tag = "Sh" if self.kind == "hole" else "Sp"
        c, d = self.create, self.destroy
        return f"{tag}({d[1]},{d[0]}->{c[0]},{c[1]})"


Generator = Union[Excitation, Scatterer]


def adjoint_string(ops: OpString) -> OpString:
    return tuple((p, not dag) for p, dag in reversed(ops))


def apply_string(ops: Sequence[tuple[int, bool]], det: int) -> tuple[int, int] | None:
    """Act with an operator string on a determinant bitmask.

    Returns ``(new_det, sign)`` or ``None`` when the string annihilates ``det``.
    """
    sign = 1
    for p, dagger in reversed(ops):
        occupied = (det >> p) & 1
        if occupied == dagger:
            return None
        if popcount(det & ((1 << p) - 1)) & 1:
            sign = -sign
        det ^= 1 << p
    return det, sign


@lru_cache(maxsize=4096)
def connections(ops: OpString, n_qubits: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All ``(src, dst, sign)`` with ``ops|src> = sign|dst>`` over ``2**n`` determinants."""
    par = parity_table(n_qubits)
    dets = np.arange(1 << n_qubits, dtype=np.int64)
    valid = np.ones(dets.shape, dtype=bool)
    sign = np.ones(dets.shape, dtype=np.int8)
    cur = dets.copy()
    for p, dagger in reversed(ops):
        bit = (cur >> p) & 1
        valid &= bit == (0 if dagger else 1)
        sign = np.where(par[cur & ((1 << p) - 1)] == 1, -sign, sign)
        cur = cur ^ (1 << p)
    src = dets[valid]
    dst = cur[valid]
    sgn = sign[valid].astype(float)
    for a in (src, dst, sgn):
        a.setflags(write=False)
    return src, dst, sgn


def ladder_qubit_operator(p: int, dagger: bool) -> QubitOperator:
    """JW image: a+_p = (X_p - iY_p)/2 Z_<p,  a_p = (X_p + iY_p)/2 Z_<p."""
    low = (1 << p) - 1
    bit = 1 << p
    # -iY = XZ and +iY = -XZ in the X^x Z^z convention
    second = 0.5 if dagger else -0.5
    return QubitOperator({(bit, low): 0.5, (bit, low | bit): second})


def jordan_wigner(ops: Sequence[tuple[int, bool]], coeff: complex = 1.0) -> QubitOperator:
    out = QubitOperator.identity(coeff)
    for p, dagger in ops:
        out = out * ladder_qubit_operator(p, dagger)
    return out


def jordan_wigner_sum(products: Iterable[tuple[complex, Sequence[tuple[int, bool]]]]) -> QubitOperator:
    out = QubitOperator()
    for coeff, ops in products:
        for key, c in jordan_wigner(ops, coeff).terms.items():
            out._add(key, c)
    return out.simplify()


@lru_cache(maxsize=4096)
def generator_qubit_operator(gen: Generator) -> QubitOperator:
    """JW image of the anti-hermitian ``Y - Y^dagger``."""
    y = jordan_wigner(gen.ops)
    return y - y.adjoint()


def excited_determinant(gen: Generator, det: int) -> tuple[int, int] | None:
    return apply_string(gen.ops, det)


def annihilates(gen: Generator, det: int) -> bool:
    return apply_string(gen.ops, det) is None


def _bits(v: int) -> tuple[int, ...]:
    return tuple(p for p in range(v.bit_length()) if (v >> p) & 1)


def excitation_string(ref: int, det: int) -> OpString:
    """Canonical ``a+_a a+_b ... a_j a_i`` string taking ``ref`` to ``det`` (any rank)."""
    occ = _bits(ref & ~det)
    virt = _bits(det & ~ref)
    return tuple((a, True) for a in virt) + tuple((i, False) for i in reversed(occ))


def excitation_between(ref: int, det: int) -> Excitation:
    """The canonical excitation (rank <= 3) taking ``ref`` to ``det``."""
    return Excitation(_bits(ref & ~det), _bits(det & ~ref))


def contract(alpha: Scatterer, double: Excitation, reference: int) -> tuple[Excitation, int] | None:
    """Contract a scatterer with a double excitation on the reference.

    Returns the rank-3 excitation ``X`` and the sign with
    ``Y_alpha Y_I |ref> = sign |phi_X>`` where ``|phi_X> = Y_X |ref>``.
    """
    first = apply_string(double.ops, reference)
    if first is None:
        return None
    det_i, s_i = first
    second = apply_string(alpha.ops, det_i)
    if second is None:
        return None
    det_x, s_a = second
    if popcount(det_x ^ reference) != 6:
        return None
    triple = excitation_between(reference, det_x)
    det_chk, s_x = apply_string(triple.ops, reference)
    assert det_chk == det_x
    return triple, s_i * s_a * s_x


@dataclass
class ContractedManifold:
    """Per-scatterer rows ``(double, triple, sign)`` of the rectangular map."""

    entries: dict[Scatterer, list[tuple[Excitation, Excitation, int]]] = field(default_factory=dict)
    inert: list[Scatterer] = field(default_factory=list)

    @property
    def scatterers(self) -> list[Scatterer]:
        return list(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def triples(self) -> set[Excitation]:
        return {x for row in self.entries.values() for _, x, _ in row}

    def matrix(self, theta_of: dict[Excitation, float]) -> tuple[np.ndarray, list[Excitation]]:
        """Dense ``C[alpha, X] = theta_I * sign`` for inspection."""
        cols = sorted(self.triples())
        col = {x: k for k, x in enumerate(cols)}
        c = np.zeros((len(self.entries), len(cols)))
        for r, row in enumerate(self.entries.values()):
            for dbl, x, s in row:
                c[r, col[x]] += theta_of.get(dbl, 0.0) * s
        return c, cols


def build_contracted_manifold(
    scatterers: Sequence[Scatterer], doubles: Sequence[Excitation], reference: int
) -> ContractedManifold:
    manifold = ContractedManifold()
    for alpha in scatterers:
        row = []
        for dbl in doubles:
            hit = contract(alpha, dbl, reference)
            if hit is not None:
                row.append((dbl, hit[0], hit[1]))
        if row:
            manifold.entries[alpha] = row
        else:
            manifold.inert.append(alpha)
    return manifold

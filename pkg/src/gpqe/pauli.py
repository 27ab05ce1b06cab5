"""Phase-tracked Pauli strings over bitmasks.

A term ``(x, z)`` with coefficient ``c`` denotes ``c * X^x Z^z``, i.e. on each
qubit Z acts first and then X.  With this convention ``Y = i X Z`` and

    (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{|z1 & x2|} X^(x1^x2) Z^(z1^z2)

so multiplication needs nothing but mask arithmetic.  Qubit ``q`` is bit ``q``
of a basis index and ``|1>`` on a qubit means the spinorbital is occupied.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping

import numpy as np

PRUNE_TOL = 1e-14


def popcount(v: int) -> int:
    return bin(v).count("1")


def parity_table(n_qubits: int) -> np.ndarray:
    """Parity (0/1) of every integer below ``2**n_qubits``."""
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    par = np.zeros(1 << n_qubits, dtype=np.int8)
    for q in range(n_qubits):
        par ^= ((idx >> q) & 1).astype(np.int8)
    return par


@dataclass(frozen=True)
class PauliTerm:
    x_mask: int
    z_mask: int
    coeff: complex = 1.0

    @property
    def weight(self) -> int:
        return popcount(self.x_mask | self.z_mask)

    def hermitian_phase(self) -> complex:
        """Factor ``i**|x&z|`` relating ``X^x Z^z`` to the hermitian string (Y=iXZ)."""
        return 1j ** (popcount(self.x_mask & self.z_mask) % 4)

    def label(self, n_qubits: int) -> str:
        chars = []
        for q in reversed(range(n_qubits)):
            xb = (self.x_mask >> q) & 1
            zb = (self.z_mask >> q) & 1
            chars.append("IZXY"[zb + 2 * xb])
        return "".join(chars)


class QubitOperator:
    """Sparse sum of Pauli strings keyed on ``(x_mask, z_mask)``."""

    def __init__(self, terms: Mapping[tuple[int, int], complex] | None = None):
        self.terms: dict[tuple[int, int], complex] = {}
        if terms:
            for key, c in terms.items():
                self._add(key, c)
            self.simplify()

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> QubitOperator:
        return cls({(0, 0): coeff})

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> QubitOperator:
        """Build from a label such as ``"XIZY"`` (rightmost char = qubit 0)."""
        x = z = 0
        phase = 1.0 + 0j
        for q, ch in enumerate(reversed(label.upper())):
            if ch == "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
                phase *= 1j
            elif ch != "I":
                raise ValueError(f"bad Pauli label character {ch!r}")
        return cls({(x, z): coeff * phase})

    def _add(self, key: tuple[int, int], c: complex) -> None:
        self.terms[key] = self.terms.get(key, 0.0) + c

    def simplify(self, tol: float = PRUNE_TOL) -> QubitOperator:
        self.terms = {k: complex(c) for k, c in self.terms.items() if abs(c) > tol}
        self.__dict__.pop("_grouped", None)
        return self

    def __iter__(self) -> Iterator[PauliTerm]:
        for (x, z), c in self.terms.items():
            yield PauliTerm(x, z, c)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: QubitOperator) -> QubitOperator:
        out = QubitOperator()
        out.terms = dict(self.terms)
        for key, c in other.terms.items():
            out._add(key, c)
        return out.simplify()

    def __sub__(self, other: QubitOperator) -> QubitOperator:
        return self + other * -1.0

    def __mul__(self, other) -> QubitOperator:
        if isinstance(other, QubitOperator):
            out = QubitOperator()
            for (x1, z1), c1 in self.terms.items():
                for (x2, z2), c2 in other.terms.items():
                    sign = -1.0 if popcount(z1 & x2) & 1 else 1.0
                    out._add((x1 ^ x2, z1 ^ z2), sign * c1 * c2)
            return out.simplify()
        out = QubitOperator()
        out.terms = {k: c * other for k, c in self.terms.items()}
        return out.simplify()

    __rmul__ = __mul__

    def adjoint(self) -> QubitOperator:
        out = QubitOperator()
        for (x, z), c in self.terms.items():
            sign = -1.0 if popcount(x & z) & 1 else 1.0
            out._add((x, z), sign * np.conj(c))
        return out.simplify()

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return (self - self.adjoint()).norm() < tol

    def is_antihermitian(self, tol: float = 1e-12) -> bool:
        return (self + self.adjoint()).norm() < tol

    def norm(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def commutes_termwise(self) -> bool:
        """True when all Pauli strings in the operator pairwise commute."""
        keys = list(self.terms)
        for a, (x1, z1) in enumerate(keys):
            for x2, z2 in keys[a + 1:]:
                if (popcount(x1 & z2) + popcount(z1 & x2)) & 1:
                    return False
        return True

    def n_qubits(self) -> int:
        top = 0
        for x, z in self.terms:
            top |= x | z
        return top.bit_length()

    def _group(self, n_qubits: int) -> list[tuple[int, np.ndarray]]:
        cache = self.__dict__.setdefault("_grouped", {})
        if n_qubits in cache:
            return cache[n_qubits]
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        par = parity_table(n_qubits)
        diags: dict[int, np.ndarray] = {}
        for (x, z), c in self.terms.items():
            # (P psi)[j] = (-1)^{|(j^x)&z|} psi[j^x]
            phase = 1.0 - 2.0 * par[(idx ^ x) & z]
            d = diags.setdefault(x, np.zeros(1 << n_qubits, dtype=complex))
            d += c * phase
        cache[n_qubits] = sorted(diags.items())
        return cache[n_qubits]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        n = int(psi.shape[0]).bit_length() - 1
        idx = np.arange(psi.shape[0], dtype=np.int64)
        out = np.zeros_like(psi, dtype=complex)
        batched = psi.ndim == 2
        for x, diag in self._group(n):
            d = diag[:, None] if batched else diag
            out += d * (psi if x == 0 else psi[idx ^ x])
        return out

    def to_sparse(self, n_qubits: int):
        import scipy.sparse as sp

        dim = 1 << n_qubits
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, vals = [], [], []
        for x, diag in self._group(n_qubits):
            rows.append(idx)
            cols.append(idx ^ x)
            vals.append(diag)
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        )
        return m.tocsr()

    def to_dense(self, n_qubits: int) -> np.ndarray:
        return self.to_sparse(n_qubits).toarray()

    def hermitian_terms(self) -> Iterable[tuple[PauliTerm, complex]]:
        """Yield each string with its coefficient on the hermitian (Y-based) form."""
        for term in self:
            yield PauliTerm(term.x_mask, term.z_mask, 1.0), term.coeff / term.hermitian_phase()

    def __repr__(self) -> str:
        n = max(self.n_qubits(), 1)
        body = " + ".join(
            f"({c:.6g}) {PauliTerm(x, z).label(n)}" for (x, z), c in sorted(self.terms.items())
        )
        return f"QubitOperator({body or '0'})"

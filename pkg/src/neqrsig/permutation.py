"""Trent's wire permutation, its basis-state encoding and the SWAP-network reorder.

``Permutation.mapping[i]`` is the 0-based destination of wire ``i``; the
1-based value P(i+1) is ``mapping[i] + 1``. ``reorder`` moves wire i's
content to wire ``mapping[i]``.

Each entry is stored as ``P(i) - 1`` in a fixed ``w = ceil(log2 N)``-bit
register (at least one wire), big-endian. The full encoding is the tensor
product of the N entry registers; it is kept as a list of per-entry states
because the joint register outgrows a dense simulator for N > 6.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cipher import KeyMaterial, decrypt_wire, encrypt_wire
from .errors import DomainError, MalformedPermutation
from .qsim import MAX_WIRES, StateVector, apply_swap, basis_state, tensor_product

_BASIS_TOL = 1e-9


@dataclass(frozen=True)
class Permutation:
    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(v) for v in self.mapping)
        if sorted(mapping) != list(range(len(mapping))) or not mapping:
            raise DomainError(f"{mapping} is not a bijection on {{0..{len(mapping) - 1}}}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def size(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_one_based(cls, values: Sequence[int]) -> "Permutation":
        return cls(tuple(int(v) - 1 for v in values))

    def one_based(self) -> list[int]:
        return [v + 1 for v in self.mapping]

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, v in enumerate(self.mapping):
            inv[v] = i
        return Permutation(tuple(inv))

    def compose(self, first: "Permutation") -> "Permutation":
        """``self o first``: apply ``first``, then ``self``."""
        if first.size != self.size:
            raise DomainError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.mapping[first.mapping[i]] for i in range(self.size)))

    def cycles(self) -> list[list[int]]:
        seen = [False] * self.size
        out = []
        for start in range(self.size):
            if seen[start]:
                continue
            cycle = []
            i = start
            while not seen[i]:
                seen[i] = True
                cycle.append(i)
                i = self.mapping[i]
            if len(cycle) > 1:
                out.append(cycle)
        return out

    def to_line(self) -> str:
        return " ".join(map(str, self.one_based()))

    @classmethod
    def from_line(cls, line: str) -> "Permutation":
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError:
            raise DomainError(f"permutation line {line.strip()!r} has non-integer values") from None
        return cls.from_one_based(values)

    def save(self, path) -> None:
        Path(path).write_text(self.to_line() + "\n")

    @classmethod
    def load(cls, path) -> "Permutation":
        return cls.from_line(Path(path).read_text())


def generate(n: int, seed) -> Permutation:
    if n < 1:
        raise DomainError("permutation size must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Permutation(tuple(int(v) for v in rng.permutation(n)))


def entry_width(n: int) -> int:
    return max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class EncodedPermutation:
    """Entry registers ``|P(1)>, ..., |P(N)>``, each ``width`` wires."""

    entries: tuple[StateVector, ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def width(self) -> int:
        return self.entries[0].wire_count

    @property
    def wire_count(self) -> int:
        return self.size * self.width

    def locate(self, wire: int) -> tuple[int, int]:
        """Global wire index -> (entry, wire within entry)."""
        if not 0 <= wire < self.wire_count:
            raise DomainError(f"wire {wire} outside a {self.wire_count}-wire permutation register")
        return divmod(wire, self.width)

    def replace(self, entry: int, state: StateVector) -> "EncodedPermutation":
        entries = list(self.entries)
        entries[entry] = state
        return EncodedPermutation(tuple(entries))

    def joint_state(self) -> StateVector:
        if self.wire_count > MAX_WIRES:
            raise DomainError(f"joint register of {self.wire_count} wires exceeds the simulator")
        return tensor_product(*self.entries)

    @classmethod
    def from_joint(cls, state: StateVector, size: int) -> "EncodedPermutation":
        """Split a joint basis state into entry registers."""
        width = entry_width(size)
        if state.wire_count != size * width:
            raise DomainError(f"{state.wire_count} wires do not hold {size} entries of width {width}")
        label = _basis_label(state)
        mask = (1 << width) - 1
        values = [(label >> (width * (size - 1 - i))) & mask for i in range(size)]
        return cls(tuple(basis_state(width, v) for v in values))

    def to_bytes(self) -> bytes:
        return b"".join(e.to_bytes() for e in self.entries)


def _basis_label(state: StateVector) -> int:
    probs = state.probabilities()
    label = int(np.argmax(probs))
    if abs(probs[label] - 1) > _BASIS_TOL:
        raise MalformedPermutation(
            f"register is not a computational basis state (max probability {probs[label]:.6f})"
        )
    return label


def encode_state(p: Permutation) -> EncodedPermutation:
    width = entry_width(p.size)
    return EncodedPermutation(tuple(basis_state(width, v) for v in p.mapping))


def decode_state(e: EncodedPermutation) -> Permutation:
    """Computational-basis readout of every entry register."""
    limit = 1 << e.width
    values = [_basis_label(entry) for entry in e.entries]
    if any(v >= limit for v in values) or sorted(values) != list(range(e.size)):
        raise MalformedPermutation(f"decoded entries {[v + 1 for v in values]} are not a permutation")
    return Permutation(tuple(values))


def encrypt_permutation(e: EncodedPermutation, key: KeyMaterial) -> EncodedPermutation:
    """Every wire of entry i is encrypted with key piece i."""
    if key.piece_count != e.size:
        raise DomainError(f"key has {key.piece_count} pieces for {e.size} entries")
    out = []
    for i, entry in enumerate(e.entries):
        piece = key.piece(i)
        for w in range(entry.wire_count):
            entry = encrypt_wire(entry, w, piece)
        out.append(entry)
    return EncodedPermutation(tuple(out))


def decrypt_permutation(e: EncodedPermutation, key: KeyMaterial) -> EncodedPermutation:
    if key.piece_count != e.size:
        raise DomainError(f"key has {key.piece_count} pieces for {e.size} entries")
    out = []
    for i, entry in enumerate(e.entries):
        piece = key.piece(i)
        for w in range(entry.wire_count):
            entry = decrypt_wire(entry, w, piece)
        out.append(entry)
    return EncodedPermutation(tuple(out))


def swap_network(p: Permutation) -> list[tuple[int, int]]:
    """SWAPs realizing ``reorder``: cycle (c0 c1 ... ck) becomes (c0,c1), (c0,c2), ..."""
    return [(cycle[0], c) for cycle in p.cycles() for c in cycle[1:]]


def _check_size(state: StateVector, p: Permutation) -> None:
    if state.wire_count != p.size:
        raise DomainError(f"permutation of size {p.size} on a {state.wire_count}-wire state")


def reorder(state: StateVector, p: Permutation) -> StateVector:
    _check_size(state, p)
    for a, b in swap_network(p):
        state = apply_swap(state, a, b)
    return state


def inverse_reorder(state: StateVector, p: Permutation) -> StateVector:
    _check_size(state, p)
    for a, b in reversed(swap_network(p)):
        state = apply_swap(state, a, b)
    return state

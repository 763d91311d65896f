"""Per-wire quantum one-time pad keyed by 8-bit pieces.

A piece ``k0..k7`` encrypts one wire with the operator

    X^k0 Z^k1 . T . X^k2 Z^k3 . T . X^k4 Z^k5 . T . X^k6 Z^k7

read as a matrix product, so ``X^k6 Z^k7`` (and within it ``Z^k7``) acts on
the ket first. ``T = (i/sqrt3)(X - Y + Z)`` satisfies ``T^2 = -I``.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError
from .qsim import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, StateVector, apply_1q

KEY_LABELS = ("AB", "TA", "TB")
PIECE_BITS = 8


def t_gate() -> np.ndarray:
    return 1j / np.sqrt(3) * (PAULI_X - PAULI_Y + PAULI_Z)


_T = t_gate()


@dataclass(frozen=True)
class KeyPiece:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) != PIECE_BITS or any(b not in (0, 1) for b in bits):
            raise DomainError(f"a key piece is exactly 8 bits, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_int(cls, value: int) -> "KeyPiece":
        """``value`` as an 8-bit word, k0 the most significant bit."""
        if not 0 <= value < 256:
            raise DomainError(f"piece value {value} out of range")
        return cls(tuple((value >> (7 - i)) & 1 for i in range(PIECE_BITS)))

    @classmethod
    def from_string(cls, text: str) -> "KeyPiece":
        return cls(tuple(int(c) for c in text))

    def __str__(self):
        return "".join(map(str, self.bits))

    def operator(self) -> np.ndarray:
        return _piece_operator(self.bits)


@lru_cache(maxsize=256)
def _piece_operator(bits: tuple[int, ...]) -> np.ndarray:
    op = PAULI_I
    for pair in range(4):
        if pair:
            op = op @ _T
        kx, kz = bits[2 * pair], bits[2 * pair + 1]
        if kx:
            op = op @ PAULI_X
        if kz:
            op = op @ PAULI_Z
    op.setflags(write=False)
    return op


@dataclass(frozen=True)
class KeyMaterial:
    """Shared secret of 8N bits; piece i is ``bits[8i:8i+8]``."""

    bits: tuple[int, ...]
    label: str = "AB"

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits or len(bits) % PIECE_BITS or any(b not in (0, 1) for b in bits):
            raise DomainError(f"key length must be a positive multiple of 8 bits, got {len(bits)}")
        object.__setattr__(self, "bits", bits)

    @property
    def piece_count(self) -> int:
        return len(self.bits) // PIECE_BITS

    def piece(self, i: int) -> KeyPiece:
        if not 0 <= i < self.piece_count:
            raise DomainError(f"piece index {i} out of range [0, {self.piece_count})")
        return KeyPiece(self.bits[PIECE_BITS * i : PIECE_BITS * (i + 1)])

    @classmethod
    def random(cls, piece_count: int, rng, label: str = "AB") -> "KeyMaterial":
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=PIECE_BITS * piece_count)), label)

    def to_hex(self) -> str:
        return bytes(
            int("".join(map(str, self.bits[i : i + 8])), 2) for i in range(0, len(self.bits), 8)
        ).hex()

    @classmethod
    def from_hex(cls, text: str, label: str = "AB") -> "KeyMaterial":
        text = text.strip()
        if not text or len(text) % 2 or text != text.lower():
            raise DomainError("key hex must be an even number of lowercase hex digits")
        try:
            raw = bytes.fromhex(text)
        except ValueError:
            raise DomainError("key file contains non-hex characters") from None
        return cls(tuple((byte >> (7 - i)) & 1 for byte in raw for i in range(8)), label)

    def save(self, path) -> None:
        Path(path).write_text(self.to_hex() + "\n")

    @classmethod
    def load(cls, path, label: str = "AB") -> "KeyMaterial":
        return cls.from_hex(Path(path).read_text(), label)


def encrypt_wire(state: StateVector, wire: int, piece: KeyPiece) -> StateVector:
    return apply_1q(state, wire, piece.operator())


def decrypt_wire(state: StateVector, wire: int, piece: KeyPiece) -> StateVector:
    return apply_1q(state, wire, piece.operator().conj().T)


def _assignment(state: StateVector, key: KeyMaterial, assignment) -> list[int]:
    m = state.wire_count
    if key.piece_count != m:
        raise DomainError(f"key has {key.piece_count} pieces for a {m}-wire register")
    if assignment is None:
        return list(range(m))
    if isinstance(assignment, Mapping):
        if sorted(assignment) != list(range(m)):
            raise DomainError("piece assignment must cover every wire exactly once")
        pieces = [int(assignment[w]) for w in range(m)]
    else:
        pieces = [int(p) for p in assignment]
    if sorted(pieces) != list(range(m)):
        raise DomainError(f"piece assignment {pieces} is not a bijection onto [0, {m})")
    return pieces


def encrypt_register(
    state: StateVector, key: KeyMaterial, piece_assignment: Mapping[int, int] | Sequence[int] | None = None
) -> StateVector:
    """Encrypt every wire; wire w uses piece ``piece_assignment[w]`` (identity by default)."""
    for wire, idx in enumerate(_assignment(state, key, piece_assignment)):
        state = encrypt_wire(state, wire, key.piece(idx))
    return state


def decrypt_register(
    state: StateVector, key: KeyMaterial, piece_assignment: Mapping[int, int] | Sequence[int] | None = None
) -> StateVector:
    for wire, idx in enumerate(_assignment(state, key, piece_assignment)):
        state = decrypt_wire(state, wire, key.piece(idx))
    return state

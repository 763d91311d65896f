"""Dense state-vector engine.

Wire 0 is the most significant bit of a basis label, so for three wires
``|101>`` is amplitude index 5. Every gate function returns a new
:class:`StateVector`; inputs are never modified.
"""
from __future__ import annotations

import struct
from collections.abc import Sequence

import numpy as np

from .errors import DomainError

MAX_WIRES = 20
QSV_MAGIC = b"QSV1"

_UNITARY_TOL = 1e-12

SQRT2_INV = 1 / np.sqrt(2)
PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT2_INV

PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class StateVector:
    """Normalized pure state over ``wire_count`` qubits.

    The amplitude array is stored read-only; build a new state instead of
    mutating one.
    """

    __slots__ = ("wire_count", "amplitudes")

    def __init__(self, amplitudes, *, normalize: bool = False, atol: float = 1e-9):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        size = amps.size
        m = size.bit_length() - 1
        if size < 2 or (1 << m) != size:
            raise DomainError(f"amplitude count {size} is not 2^m with m >= 1")
        if m > MAX_WIRES:
            raise DomainError(f"{m} wires exceeds the {MAX_WIRES}-wire limit")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1) > atol:
            raise DomainError(f"state norm {norm!r} deviates from 1")
        amps.setflags(write=False)
        self.wire_count = m
        self.amplitudes = amps

    def __repr__(self):
        return f"StateVector(wire_count={self.wire_count})"

    def __len__(self):
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        """View of the amplitudes as a rank-m tensor, axis k = wire k."""
        return self.amplitudes.reshape((2,) * self.wire_count)

    def to_bytes(self) -> bytes:
        """QSV1 serialization: magic, u32 wire count, then (re, im) f64 pairs, all LE."""
        header = QSV_MAGIC + struct.pack("<I", self.wire_count)
        return header + self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "StateVector":
        if len(data) < 8 or data[:4] != QSV_MAGIC:
            raise DomainError("not a QSV1 stream (bad magic)")
        (m,) = struct.unpack("<I", data[4:8])
        if not 1 <= m <= MAX_WIRES:
            raise DomainError(f"QSV1 wire count {m} out of range")
        body = data[8:]
        if len(body) != 16 << m:
            raise DomainError(f"QSV1 body has {len(body)} bytes, expected {16 << m}")
        return cls(np.frombuffer(body, dtype="<c16").astype(complex))


def _wrap(tensor: np.ndarray) -> StateVector:
    return StateVector(tensor.reshape(-1))


def _check_wire(state: StateVector, wire: int) -> int:
    if not isinstance(wire, (int, np.integer)) or not 0 <= wire < state.wire_count:
        raise DomainError(f"wire {wire!r} invalid for a {state.wire_count}-wire state")
    return int(wire)


def as_unitary(matrix, atol: float = _UNITARY_TOL) -> np.ndarray:
    """Validate a 2x2 matrix as unitary and return it as a complex array."""
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {u.shape}")
    if np.abs(u.conj().T @ u - PAULI_I).max() > atol:
        raise DomainError("matrix is not unitary")
    return u


def basis_state(wire_count: int, label: int) -> StateVector:
    if not 1 <= wire_count <= MAX_WIRES:
        raise DomainError(f"wire count {wire_count} out of range [1, {MAX_WIRES}]")
    if not 0 <= label < (1 << wire_count):
        raise DomainError(f"label {label} out of range for {wire_count} wires")
    amps = np.zeros(1 << wire_count, dtype=complex)
    amps[label] = 1
    return StateVector(amps)


def apply_1q(state: StateVector, wire: int, u) -> StateVector:
    wire = _check_wire(state, wire)
    u = as_unitary(u)
    psi = np.moveaxis(state.tensor(), wire, 0)
    out = np.tensordot(u, psi, axes=([1], [0]))
    return _wrap(np.moveaxis(out, 0, wire))


def apply_controlled_phase(state: StateVector, control: int, target: int, angle: float) -> StateVector:
    control = _check_wire(state, control)
    target = _check_wire(state, target)
    if control == target:
        raise DomainError("control and target must differ")
    psi = state.tensor().copy()
    idx = [slice(None)] * state.wire_count
    idx[control] = 1
    idx[target] = 1
    psi[tuple(idx)] *= np.exp(1j * angle)
    return _wrap(psi)


def apply_swap(state: StateVector, a: int, b: int) -> StateVector:
    a = _check_wire(state, a)
    b = _check_wire(state, b)
    if a == b:
        raise DomainError("swap wires must differ")
    return _wrap(np.swapaxes(state.tensor(), a, b).copy())


def permute_wires(state: StateVector, destinations: Sequence[int]) -> StateVector:
    """Move the content of wire i to wire ``destinations[i]`` in one transpose."""
    m = state.wire_count
    if sorted(destinations) != list(range(m)):
        raise DomainError("destinations must be a permutation of the wires")
    order = [0] * m
    for src, dst in enumerate(destinations):
        order[dst] = src
    return _wrap(np.transpose(state.tensor(), order).copy())


def tensor_product(*states: StateVector) -> StateVector:
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
    return StateVector(amps)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.wire_count != b.wire_count:
        raise DomainError(f"wire counts differ ({a.wire_count} vs {b.wire_count})")
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    return float(min(1.0, abs(overlap) ** 2))


def sample(state: StateVector, shots: int, seed) -> dict[int, int]:
    """Draw ``shots`` computational-basis outcomes; returns ``{label: count}``.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    if shots < 1:
        raise DomainError("shots must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = state.probabilities()
    counts = rng.multinomial(shots, probs / probs.sum())
    return {int(k): int(counts[k]) for k in np.flatnonzero(counts)}


def fnv1a64(data: bytes) -> str:
    """64-bit FNV-1a digest as 16 lowercase hex digits."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def save_qsv(state: StateVector, path) -> None:
    with open(path, "wb") as fh:
        fh.write(state.to_bytes())


def load_qsv(path) -> StateVector:
    with open(path, "rb") as fh:
        return StateVector.from_bytes(fh.read())

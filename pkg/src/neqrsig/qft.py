"""Quantum Fourier transform as an explicit matrix and as a gate circuit.

The circuit is Hadamards plus controlled phase rotations followed by a
bit-reversal SWAP stage, so ``apply_qft`` equals multiplication by
``qft_matrix`` exactly (no leftover qubit reordering).
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .errors import DomainError
from .qsim import (
    HADAMARD,
    StateVector,
    apply_1q,
    apply_controlled_phase,
    apply_swap,
)

MAX_MATRIX_WIRES = 10


def qft_matrix(m: int) -> np.ndarray:
    """Entry (y, x) is exp(2*pi*i*x*y / 2^m) / sqrt(2^m)."""
    if not 1 <= m <= MAX_MATRIX_WIRES:
        raise DomainError(f"qft_matrix supports 1 <= m <= {MAX_MATRIX_WIRES}, got {m}")
    dim = 1 << m
    k = np.arange(dim)
    # reduce x*y mod dim first so the phase argument stays small
    return np.exp(2j * np.pi * (np.outer(k, k) % dim) / dim) / np.sqrt(dim)


def _check_span(state: StateVector, span: Sequence[int] | None) -> list[int]:
    if span is None:
        return list(range(state.wire_count))
    span = [int(w) for w in span]
    if not span:
        raise DomainError("wire span is empty")
    if len(set(span)) != len(span):
        raise DomainError(f"wire span {span} repeats a wire")
    bad = [w for w in span if not 0 <= w < state.wire_count]
    if bad:
        raise DomainError(f"wires {bad} outside a {state.wire_count}-wire state")
    return span


def qft_gates(span: Sequence[int]) -> list[tuple]:
    """Gate list for the forward transform on ``span`` (span[0] most significant).

    Items are ``("h", w)``, ``("cp", control, target, angle)`` or ``("swap", a, b)``.
    """
    gates: list[tuple] = []
    m = len(span)
    for j in range(m):
        gates.append(("h", span[j]))
        for k in range(j + 1, m):
            gates.append(("cp", span[k], span[j], 2 * np.pi / 2 ** (k - j + 1)))
    for i in range(m // 2):
        gates.append(("swap", span[i], span[m - 1 - i]))
    return gates


def _run(state: StateVector, gates: list[tuple], inverse: bool) -> StateVector:
    if inverse:
        gates = reversed(gates)
    for gate in gates:
        kind = gate[0]
        if kind == "h":
            state = apply_1q(state, gate[1], HADAMARD)
        elif kind == "cp":
            angle = -gate[3] if inverse else gate[3]
            state = apply_controlled_phase(state, gate[1], gate[2], angle)
        else:
            state = apply_swap(state, gate[1], gate[2])
    return state


def apply_qft(state: StateVector, span: Sequence[int] | None = None) -> StateVector:
    """Run the QFT circuit on ``span`` (all wires when omitted)."""
    return _run(state, qft_gates(_check_span(state, span)), inverse=False)


def apply_iqft(state: StateVector, span: Sequence[int] | None = None) -> StateVector:
    return _run(state, qft_gates(_check_span(state, span)), inverse=True)


def apply_matrix_on_span(state: StateVector, matrix: np.ndarray, span: Sequence[int] | None = None) -> StateVector:
    """Multiply the ``span`` subsystem by ``matrix``; reference path for the circuit."""
    span = _check_span(state, span)
    m = len(span)
    if matrix.shape != (1 << m, 1 << m):
        raise DomainError(f"matrix shape {matrix.shape} does not fit a {m}-wire span")
    psi = np.moveaxis(state.tensor(), span, range(m))
    rest = psi.shape[m:]
    out = (matrix @ psi.reshape(1 << m, -1)).reshape((2,) * m + rest)
    return StateVector(np.moveaxis(out, range(m), span).reshape(-1))


def max_circuit_deviation(m: int, trials: int = 20, seed: int = 0) -> float:
    """Largest amplitude gap between circuit and matrix QFT over random states."""
    rng = np.random.default_rng(seed)
    matrix = qft_matrix(m)
    worst = 0.0
    for _ in range(trials):
        raw = rng.normal(size=1 << m) + 1j * rng.normal(size=1 << m)
        psi = StateVector(raw, normalize=True)
        gap = np.abs(apply_qft(psi).amplitudes - matrix @ psi.amplitudes).max()
        worst = max(worst, float(gap))
    return worst

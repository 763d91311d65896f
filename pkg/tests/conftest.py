import sys

import numpy as np
import pytest

from neqrsig.qsim import StateVector


def random_state(m, rng):
    raw = rng.normal(size=1 << m) + 1j * rng.normal(size=1 << m)
    return StateVector(raw, normalize=True)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ket(bits: str) -> np.ndarray:
    """Computational basis vector built by Kronecker products, e.g. ket('01')."""
    out = np.array([1.0 + 0j])
    for b in bits:
        out = np.kron(out, np.array([1, 0], dtype=complex) if b == "0" else np.array([0, 1], dtype=complex))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is not None and acceptance.CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.CRITERIA:
            terminalreporter.write_line(line)

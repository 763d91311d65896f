import numpy as np
import pytest

from neqrsig.cipher import (
    KeyMaterial,
    KeyPiece,
    decrypt_register,
    decrypt_wire,
    encrypt_register,
    encrypt_wire,
    t_gate,
)
from neqrsig.errors import DomainError
from neqrsig.qsim import PAULI_X, StateVector, apply_1q, basis_state, fidelity

from conftest import random_state

I2 = np.eye(2)


def test_t_gate_entries():
    expected = 1j / np.sqrt(3) * np.array([[1, 1 + 1j], [1 - 1j, -1]])
    assert np.abs(t_gate() - expected).max() < 1e-15


def test_t_gate_algebra():
    t = t_gate()
    assert np.abs(t.conj().T @ t - I2).max() < 1e-12
    assert np.abs(t @ t + I2).max() < 1e-12
    assert np.abs(np.linalg.matrix_power(t, 4) - I2).max() < 1e-12


def test_zero_piece_is_minus_t():
    op = KeyPiece.from_string("00000000").operator()
    assert np.abs(op + t_gate()).max() < 1e-12


def test_zero_piece_decrypt_is_adjoint_of_minus_t():
    psi = random_state(1, np.random.default_rng(0))
    piece = KeyPiece.from_string("00000000")
    expected = apply_1q(psi, 0, (-t_gate()).conj().T)
    assert np.abs(decrypt_wire(psi, 0, piece).amplitudes - expected.amplitudes).max() < 1e-12


def test_leading_x_bit():
    out = encrypt_wire(basis_state(1, 0), 0, KeyPiece.from_string("10000000"))
    ref = StateVector(-PAULI_X @ t_gate() @ np.array([1, 0]))
    assert fidelity(out, ref) == pytest.approx(1.0, abs=1e-12)
    assert np.abs(out.amplitudes - ref.amplitudes).max() < 1e-12


def test_operator_order_trailing_bits_act_first():
    # k7 = 1: Z is applied to the ket before anything else
    op = KeyPiece.from_string("00000001").operator()
    z = np.diag([1, -1])
    assert np.abs(op - (-t_gate()) @ z).max() < 1e-12
    op = KeyPiece.from_string("00000010").operator()
    assert np.abs(op - (-t_gate()) @ PAULI_X).max() < 1e-12


def test_piece_validation():
    with pytest.raises(DomainError):
        KeyPiece((0, 1, 0))
    with pytest.raises(DomainError):
        KeyPiece((0, 1, 0, 2, 0, 0, 0, 0))
    assert str(KeyPiece.from_int(0b10100001)) == "10100001"


def test_key_pieces_partition_bits():
    key = KeyMaterial.random(6, np.random.default_rng(1))
    assert len(key.bits) == 48
    assert sum((key.piece(i).bits for i in range(6)), ()) == key.bits
    with pytest.raises(DomainError):
        key.piece(6)


def test_key_hex_roundtrip(tmp_path):
    key = KeyMaterial.random(6, np.random.default_rng(2), label="TB")
    text = key.to_hex()
    assert len(text) == 12 and text == text.lower()
    # byte i of the file is piece i
    assert int(text[2:4], 16) == int(str(key.piece(1)), 2)
    path = tmp_path / "k.hex"
    key.save(path)
    assert path.read_text().count("\n") == 1
    assert KeyMaterial.load(path, "TB") == key


@pytest.mark.parametrize("text", ["ABCD", "abc", "zz", ""])
def test_key_hex_rejects(text):
    with pytest.raises(DomainError):
        KeyMaterial.from_hex(text)


def test_roundtrip_200_pairs():
    rng = np.random.default_rng(7)
    worst = 1.0
    for _ in range(200):
        psi = random_state(6, rng)
        key = KeyMaterial.random(6, rng)
        order = rng.permutation(6)
        back = decrypt_register(encrypt_register(psi, key, order), key, order)
        worst = min(worst, fidelity(back, psi))
    assert worst >= 1 - 1e-10


def test_cipher_preserves_norm_per_wire():
    rng = np.random.default_rng(8)
    psi = random_state(3, rng)
    for v in range(256):
        out = encrypt_wire(psi, v % 3, KeyPiece.from_int(v))
        assert abs(out.norm() - 1) < 1e-12


def test_wrong_piece_generally_fails():
    rng = np.random.default_rng(9)
    fids = []
    for _ in range(100):
        psi = random_state(1, rng)
        a, b = rng.choice(256, size=2, replace=False)
        back = decrypt_wire(encrypt_wire(psi, 0, KeyPiece.from_int(int(a))), 0, KeyPiece.from_int(int(b)))
        fids.append(fidelity(back, psi))
    fids = np.array(fids)
    # distinct pieces can still coincide up to phase on some inputs; most must not
    assert np.mean(fids < 1 - 1e-6) > 0.9
    assert fids.min() < 0.5


def test_disjoint_wires_commute():
    rng = np.random.default_rng(10)
    psi = random_state(2, rng)
    p0, p1 = KeyPiece.from_int(0x5A), KeyPiece.from_int(0xC3)
    a = encrypt_wire(encrypt_wire(psi, 0, p0), 1, p1)
    b = encrypt_wire(encrypt_wire(psi, 1, p1), 0, p0)
    assert np.abs(a.amplitudes - b.amplitudes).max() < 1e-14


def test_permuted_assignment_needs_matching_decrypt():
    rng = np.random.default_rng(11)
    mismatched = 0
    for _ in range(100):
        psi = random_state(4, rng)
        key = KeyMaterial.random(4, rng)
        order = rng.permutation(4)
        if list(order) == [0, 1, 2, 3]:
            continue
        back = decrypt_register(encrypt_register(psi, key, order), key)
        mismatched += fidelity(back, psi) < 1 - 1e-6
    assert mismatched >= 90


def test_assignment_mapping_form_and_validation():
    psi = basis_state(3, 2)
    key = KeyMaterial.random(3, np.random.default_rng(0))
    a = encrypt_register(psi, key, {0: 2, 1: 0, 2: 1})
    b = encrypt_register(psi, key, [2, 0, 1])
    assert np.array_equal(a.amplitudes, b.amplitudes)
    with pytest.raises(DomainError):
        encrypt_register(psi, key, [0, 0, 1])
    with pytest.raises(DomainError):
        encrypt_register(psi, KeyMaterial.random(2, np.random.default_rng(0)))


def test_single_bit_flip_sensitivity():
    rng = np.random.default_rng(12)
    changed = 0
    trials = 200
    for _ in range(trials):
        psi = random_state(6, rng)
        key = KeyMaterial.random(6, rng)
        bit = int(rng.integers(48))
        flipped = list(key.bits)
        flipped[bit] ^= 1
        other = KeyMaterial(tuple(flipped))
        back = decrypt_register(encrypt_register(psi, key), other)
        changed += fidelity(back, psi) < 1 - 1e-6
    assert changed / trials >= 0.99

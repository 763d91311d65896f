import numpy as np
import pytest

from neqrsig.errors import DomainError, MalformedNeqrState, PgmFormatError
from neqrsig.neqr import (
    GrayscaleImage,
    NeqrLayout,
    decode_exact,
    encode,
    random_image,
    read_pgm,
    retrieve_sampled,
    write_mask,
    write_pgm,
)
from neqrsig.qsim import StateVector

from conftest import ket


def neqr_by_kron(image: GrayscaleImage) -> np.ndarray:
    """Reference encoding: sum over pixels of |f> (x) |Y> (x) |X> built from Kronecker products."""
    n, q = image.n, image.q
    out = 0
    for y in range(image.side):
        for x in range(image.side):
            f = int(image.pixels[y, x])
            out = out + ket(format(f, f"0{q}b") + format(y, f"0{n}b") + format(x, f"0{n}b"))
    return out / image.side


def test_layout_ranges():
    lay = NeqrLayout(q=8, n=2)
    assert lay.wire_count == 12
    assert list(lay.color_wires) == list(range(8))
    assert list(lay.y_wires) == [8, 9]
    assert list(lay.x_wires) == [10, 11]
    covered = sorted([*lay.color_wires, *lay.y_wires, *lay.x_wires])
    assert covered == list(range(12))


def test_image_validation():
    with pytest.raises(DomainError):
        GrayscaleImage(1, 2, [[0, 4], [0, 0]])
    with pytest.raises(DomainError):
        GrayscaleImage(1, 2, [[0, 1, 2], [0, 0, 0]])
    with pytest.raises(DomainError):
        GrayscaleImage.from_array(np.zeros((3, 3), int), 2)


def test_encode_all_zero():
    img = GrayscaleImage(1, 2, np.zeros((2, 2), int))
    amps = encode(img).amplitudes
    assert np.allclose(amps[:4], 0.5) and np.count_nonzero(amps) == 4


def test_encode_ramp_matches_kron_reference():
    img = GrayscaleImage(1, 2, [[0, 1], [2, 3]])
    amps = encode(img).amplitudes
    # (|00>|00> + |01>|01> + |10>|10> + |11>|11>)/2 -> labels 0, 5, 10, 15
    assert set(np.flatnonzero(amps)) == {0, 5, 10, 15}
    assert np.allclose(amps, neqr_by_kron(img), atol=0)


def test_encode_4x4_depth8():
    img = random_image(2, 8, np.random.default_rng(7))
    state = encode(img)
    assert state.wire_count == 12  # q + 2n = 8 + 4
    nz = np.flatnonzero(state.amplitudes)
    assert nz.size == 16
    assert np.allclose(np.abs(state.amplitudes[nz]), 0.25)
    assert abs(state.norm() - 1) < 1e-12


def test_encode_16_wire_register():
    img = random_image(4, 8, np.random.default_rng(8))
    state = encode(img)
    assert state.wire_count == 16
    assert np.count_nonzero(state.amplitudes) == 256
    assert decode_exact(state, img.layout) == img


@pytest.mark.parametrize("n, q", [(1, 2), (1, 8), (2, 4), (2, 1), (3, 3)])
def test_encode_matches_reference_random(n, q):
    img = random_image(n, q, np.random.default_rng(n * 100 + q))
    assert np.allclose(encode(img).amplitudes, neqr_by_kron(img), atol=1e-15)


def test_roundtrip_fifty_images():
    rng = np.random.default_rng(99)
    for i in range(50):
        n, q = [(1, 2), (1, 8), (2, 4)][i % 3]
        img = random_image(n, q, rng)
        assert decode_exact(encode(img), img.layout) == img


def test_decode_two_colours_names_position():
    amps = np.zeros(16, dtype=complex)
    amps[0b00_00] = amps[0b01_00] = 1 / np.sqrt(2)
    with pytest.raises(MalformedNeqrState) as exc:
        decode_exact(StateVector(amps), NeqrLayout(q=2, n=1))
    assert exc.value.position == (0, 0)
    assert "Y=0, X=0" in str(exc.value)


def test_decode_zero_weight_position():
    amps = np.zeros(16, dtype=complex)
    amps[[1, 2, 3]] = 1 / np.sqrt(3)
    with pytest.raises(MalformedNeqrState, match="zero weight") as exc:
        decode_exact(StateVector(amps), NeqrLayout(q=2, n=1))
    assert exc.value.position == (0, 0)


def test_decode_wrong_wire_count():
    with pytest.raises(DomainError):
        decode_exact(encode(random_image(1, 2, 0)), NeqrLayout(q=3, n=1))


def test_sampled_single_shot_coverage():
    img = random_image(1, 2, np.random.default_rng(1))
    res = retrieve_sampled(encode(img), img.layout, shots=1, seed=5)
    assert res.coverage == 0.25
    assert res.observed.sum() == 1


def test_sampled_colours_never_wrong():
    rng = np.random.default_rng(2)
    for seed in range(100):
        img = random_image(2, 4, rng)
        res = retrieve_sampled(encode(img), img.layout, shots=12, seed=seed)
        assert np.array_equal(res.image.pixels[res.observed], img.pixels[res.observed])


def test_sampled_coverage_coupon_collector():
    img = GrayscaleImage(1, 2, [[3, 1], [0, 2]])
    state = encode(img)
    full = sum(retrieve_sampled(state, img.layout, 256, seed).coverage == 1.0 for seed in range(100))
    # P(miss some position) <= 4 * (3/4)^256 ~ 4e-32
    assert full == 100


def test_sampled_detects_inconsistent_colours():
    amps = np.zeros(16, dtype=complex)
    amps[[0b00_00, 0b01_00]] = 1 / np.sqrt(2)
    with pytest.raises(MalformedNeqrState):
        retrieve_sampled(StateVector(amps), NeqrLayout(q=2, n=1), shots=64, seed=0)


# ---------------------------------------------------------------- PGM

def test_pgm_roundtrip(tmp_path):
    img = random_image(2, 4, np.random.default_rng(3))
    path = tmp_path / "img.pgm"
    write_pgm(img, path)
    assert path.read_text().startswith("P2\n4 4\n15\n")
    assert read_pgm(path) == img


def test_pgm_comments_and_free_layout(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_text("P2\n# a comment\n2 2 # trailing\n3\n0 1\n2\n3\n")
    assert read_pgm(path) == GrayscaleImage(1, 2, [[0, 1], [2, 3]])


@pytest.mark.parametrize(
    "body, message",
    [
        ("P2\n3 3\n3\n" + "0 " * 9, "dimensions must be 2^n"),
        ("P2\n2 4\n3\n" + "0 " * 8, "dimensions must be 2^n"),
        ("P2\n2 2\n200\n0 0 0 0\n", "maxval must be 2^q"),
        ("P5\n2 2\n3\n", "P2"),
        ("P2\n2 2\n3\n0 0 0\n", "expected 4"),
        ("P2\n2 2\n3\n0 0 0 9\n", "pixel values"),
    ],
)
def test_pgm_rejections(tmp_path, body, message):
    path = tmp_path / "bad.pgm"
    path.write_text(body)
    with pytest.raises(PgmFormatError, match=message.replace("^", r"\^")):
        read_pgm(path)


def test_mask_sidecar(tmp_path):
    path = tmp_path / "m.mask"
    write_mask(np.array([[True, False], [False, True]]), path)
    assert path.read_text() == "1\n0\n0\n1\n"

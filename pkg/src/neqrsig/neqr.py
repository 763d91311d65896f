"""NEQR encoding of grayscale images and the matching readouts.

A ``2^n x 2^n`` image with ``q``-bit pixels lives on ``N = q + 2n`` wires.
The basis label of pixel (Y, X) is ``f(Y,X) || Y || X``: colour bits on
wires ``0..q-1`` (C^0 most significant), then the row, then the column.
Every position carries amplitude ``2^-n``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, MalformedNeqrState, PgmFormatError
from .qsim import StateVector, sample

_NEQR_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class GrayscaleImage:
    n: int
    q: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.q < 1:
            raise DomainError(f"need n >= 1 and q >= 1, got n={self.n}, q={self.q}")
        px = np.array(self.pixels, dtype=np.int64)
        side = 1 << self.n
        if px.shape != (side, side):
            raise DomainError(f"pixels must be {side}x{side}, got shape {px.shape}")
        if px.min() < 0 or px.max() >= 1 << self.q:
            raise DomainError(f"pixel values must lie in [0, {(1 << self.q) - 1}]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, pixels, q: int) -> "GrayscaleImage":
        px = np.asarray(pixels)
        side = px.shape[0]
        n = side.bit_length() - 1
        if side < 2 or (1 << n) != side:
            raise DomainError(f"dimensions must be 2^n, got {px.shape}")
        return cls(n, q, px)

    @property
    def side(self) -> int:
        return 1 << self.n

    @property
    def layout(self) -> "NeqrLayout":
        return NeqrLayout(q=self.q, n=self.n)

    def with_pixel(self, y: int, x: int, value: int) -> "GrayscaleImage":
        px = self.pixels.copy()
        px[y, x] = value
        return GrayscaleImage(self.n, self.q, px)

    def to_dict(self) -> dict:
        return {"n": self.n, "q": self.q, "pixels": self.pixels.tolist()}

    def __eq__(self, other):
        if not isinstance(other, GrayscaleImage):
            return NotImplemented
        return self.n == other.n and self.q == other.q and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.n, self.q, self.pixels.tobytes()))


@dataclass(frozen=True)
class NeqrLayout:
    q: int
    n: int

    @property
    def wire_count(self) -> int:
        return self.q + 2 * self.n

    @property
    def color_wires(self) -> range:
        return range(0, self.q)

    @property
    def y_wires(self) -> range:
        return range(self.q, self.q + self.n)

    @property
    def x_wires(self) -> range:
        return range(self.q + self.n, self.wire_count)

    @classmethod
    def for_wires(cls, wire_count: int, q: int) -> "NeqrLayout":
        rest = wire_count - q
        if q < 1 or rest < 2 or rest % 2:
            raise DomainError(f"{wire_count} wires cannot hold a q={q} NEQR image")
        return cls(q=q, n=rest // 2)

    def label(self, color: int, y: int, x: int) -> int:
        return (color << 2 * self.n) | (y << self.n) | x

    def split(self, label: int) -> tuple[int, int, int]:
        mask = (1 << self.n) - 1
        return label >> 2 * self.n, (label >> self.n) & mask, label & mask


def random_image(n: int, q: int, rng) -> GrayscaleImage:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    side = 1 << n
    return GrayscaleImage(n, q, rng.integers(0, 1 << q, size=(side, side)))


def encode(image: GrayscaleImage) -> StateVector:
    layout = image.layout
    amps = np.zeros(1 << layout.wire_count, dtype=complex)
    ys, xs = np.indices((image.side, image.side))
    labels = (image.pixels << 2 * image.n) | (ys << image.n) | xs
    amps[labels.ravel()] = 1.0 / image.side
    return StateVector(amps)


def _check_layout(state: StateVector, layout: NeqrLayout) -> None:
    if state.wire_count != layout.wire_count:
        raise DomainError(
            f"state has {state.wire_count} wires, layout needs {layout.wire_count}"
        )


def decode_exact(state: StateVector, layout: NeqrLayout) -> GrayscaleImage:
    """Read the image straight from the amplitudes.

    Raises :class:`MalformedNeqrState` for the first position (row-major)
    that has no colour, several colours, or the wrong amplitude magnitude.
    """
    _check_layout(state, layout)
    side = 1 << layout.n
    # rows: colour value, columns: position label Y||X
    mags = np.abs(state.amplitudes).reshape(1 << layout.q, side * side)
    expected = 1.0 / side
    pixels = np.zeros((side, side), dtype=np.int64)
    for pos in range(side * side):
        y, x = divmod(pos, side)
        colors = np.flatnonzero(mags[:, pos] > _NEQR_TOL)
        if colors.size == 0:
            raise MalformedNeqrState(f"position (Y={y}, X={x}) has zero weight", (y, x))
        if colors.size > 1:
            raise MalformedNeqrState(
                f"position (Y={y}, X={x}) carries {colors.size} colours {colors.tolist()}", (y, x)
            )
        if abs(mags[colors[0], pos] - expected) > _NEQR_TOL:
            raise MalformedNeqrState(
                f"position (Y={y}, X={x}) has amplitude {mags[colors[0], pos]:.3g}, expected {expected:.3g}",
                (y, x),
            )
        pixels[y, x] = colors[0]
    return GrayscaleImage(layout.n, layout.q, pixels)


@dataclass(frozen=True)
class SampledImage:
    """Outcome of measurement-based retrieval.

    Unobserved pixels are 0 in ``image`` and False in ``observed``.
    """

    image: GrayscaleImage
    observed: np.ndarray
    coverage: float

    @property
    def complete(self) -> bool:
        return bool(self.observed.all())

    def agrees_with(self, other: "SampledImage") -> bool:
        both = self.observed & other.observed
        return bool(np.array_equal(self.image.pixels[both], other.image.pixels[both]))


def retrieve_sampled(state: StateVector, layout: NeqrLayout, shots: int, seed) -> SampledImage:
    _check_layout(state, layout)
    side = 1 << layout.n
    counts = sample(state, shots, seed)
    pixels = np.zeros((side, side), dtype=np.int64)
    observed = np.zeros((side, side), dtype=bool)
    for label in sorted(counts):
        color, y, x = layout.split(label)
        if observed[y, x] and pixels[y, x] != color:
            raise MalformedNeqrState(
                f"position (Y={y}, X={x}) measured with colours {pixels[y, x]} and {color}", (y, x)
            )
        pixels[y, x] = color
        observed[y, x] = True
    coverage = observed.sum() / observed.size
    return SampledImage(GrayscaleImage(layout.n, layout.q, pixels), observed, float(coverage))


_PGM_TOKEN = re.compile(rb"#[^\n]*|\S+")


def read_pgm(path) -> GrayscaleImage:
    """Parse an ASCII (P2) PGM whose side is 2^n and maxval is 2^q - 1."""
    data = Path(path).read_bytes()
    tokens = [t for t in _PGM_TOKEN.findall(data) if not t.startswith(b"#")]
    if not tokens or tokens[0] != b"P2":
        raise PgmFormatError("only ASCII PGM (magic P2) is supported")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
        values = [int(t) for t in tokens[4:]]
    except ValueError as exc:
        raise PgmFormatError(f"non-integer PGM token: {exc}") from None
    if width != height or width < 2 or width & (width - 1):
        raise PgmFormatError(f"dimensions must be 2^n (square, n >= 1), got {width}x{height}")
    q = (maxval + 1).bit_length() - 1
    if maxval < 1 or (1 << q) != maxval + 1:
        raise PgmFormatError(f"maxval must be 2^q - 1, got {maxval}")
    if len(values) != width * height:
        raise PgmFormatError(f"expected {width * height} pixel values, found {len(values)}")
    px = np.array(values, dtype=np.int64).reshape(height, width)
    if px.min() < 0 or px.max() > maxval:
        raise PgmFormatError(f"pixel values must lie in [0, {maxval}]")
    return GrayscaleImage.from_array(px, q)


def write_pgm(image: GrayscaleImage, path) -> None:
    lines = ["P2", f"{image.side} {image.side}", str((1 << image.q) - 1)]
    lines += [" ".join(str(v) for v in row) for row in image.pixels.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_mask(observed: np.ndarray, path) -> None:
    """Sidecar for sampled readout: one 0/1 per pixel, row-major, one per line."""
    Path(path).write_text("".join(f"{int(v)}\n" for v in np.asarray(observed).ravel()))

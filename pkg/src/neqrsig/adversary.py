"""Scripted attacks on a session and the detection-rate sweep.

Three scenarios: Bob reporting a forged image to Trent, an outsider
applying a single-wire unitary to an in-flight state, and Alice
disowning the image she signed. ``detected`` means the session did not
end Valid.
"""
from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .neqr import GrayscaleImage
from .permutation import EncodedPermutation, entry_width
from .protocol import (
    INTERCEPT_POINTS,
    SessionConfig,
    SessionTranscript,
    Verdict,
    run_session,
)
from .qsim import PAULIS, apply_1q, as_unitary

BOB_FORGERY = "bob-forgery"
ALICE_REPUDIATION = "alice-repudiation"
OUTSIDER_TAMPER = "outsider-tamper"
SCENARIOS = (BOB_FORGERY, ALICE_REPUDIATION, OUTSIDER_TAMPER)

SWEEP_CHANNELS = ("TB(S)", "A(S)")
CSV_HEADER = ("scenario", "channel", "wire", "pauli", "trials", "detected")


@dataclass(frozen=True)
class AttackScenario:
    kind: str
    seed: int
    channel: str | None = None
    wire: int | None = None
    pauli: str | None = None

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise DomainError(f"unknown scenario {self.kind!r}")
        if self.kind == OUTSIDER_TAMPER and self.channel not in INTERCEPT_POINTS:
            raise DomainError(f"{self.channel!r} is not a protocol transmission")


@dataclass(frozen=True)
class AttackReport:
    scenario: AttackScenario
    detected: bool
    verdict: Verdict
    detail: str
    transcript: SessionTranscript


def _report(scenario: AttackScenario, transcript: SessionTranscript) -> AttackReport:
    verdict = transcript.verdict
    if verdict.valid:
        detail = "accepted: every comparison passed"
    else:
        detail = f"{verdict.status.value}({verdict.reason.value}): {verdict.detail}"
    return AttackReport(scenario, not verdict.valid, verdict, detail, transcript)


def single_pixel_change(image: GrayscaleImage, seed, position: tuple[int, int] | None = None) -> GrayscaleImage:
    """Copy of ``image`` with one pixel moved to a different value."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if position is None:
        y, x = (int(v) for v in rng.integers(0, image.side, size=2))
    else:
        y, x = position
    levels = 1 << image.q
    value = (int(image.pixels[y, x]) + int(rng.integers(1, levels))) % levels
    return image.with_pixel(y, x, value)


def all_single_pixel_changes(image: GrayscaleImage) -> list[GrayscaleImage]:
    """Every image at Hamming distance one pixel from ``image``."""
    out = []
    for y in range(image.side):
        for x in range(image.side):
            for value in range(1 << image.q):
                if value != image.pixels[y, x]:
                    out.append(image.with_pixel(y, x, value))
    return out


def bob_forgery(config: SessionConfig, seed: int, forged: GrayscaleImage | None = None) -> AttackReport:
    """Bob verifies honestly, then tells Trent the image was ``forged``."""
    if forged is None:
        forged = single_pixel_change(config.image, seed)
    scenario = AttackScenario(BOB_FORGERY, seed, channel="BT(S)")
    return _report(scenario, run_session(replace(config, seed=seed, bob_claim=forged)))


def alice_repudiation(config: SessionConfig, seed: int, claimed: GrayscaleImage | None = None) -> AttackReport:
    """Alice signs honestly, then submits ``claimed`` when Trent asks for the image."""
    if claimed is None:
        claimed = single_pixel_change(config.image, seed)
    scenario = AttackScenario(ALICE_REPUDIATION, seed, channel="AT(I)")
    return _report(scenario, run_session(replace(config, seed=seed, alice_claim=claimed)))


class WireTamper:
    """Tamper hook applying ``unitary`` to one wire at one intercept point."""

    def __init__(self, point: str, wire: int, unitary, name: str = "U"):
        if point not in INTERCEPT_POINTS:
            raise DomainError(f"unknown channel {point!r}; expected one of {INTERCEPT_POINTS}")
        self.point = point
        self.wire = wire
        self.unitary = as_unitary(unitary)
        self.label = f"{name}@{point}[{wire}]"

    def __call__(self, point, payload):
        if point != self.point:
            return payload
        if isinstance(payload, EncodedPermutation):
            entry, local = payload.locate(self.wire)
            return payload.replace(entry, apply_1q(payload.entries[entry], local, self.unitary))
        return apply_1q(payload, self.wire, self.unitary)


def channel_wire_count(config: SessionConfig, channel: str) -> int:
    n = config.wire_count
    if channel in ("P_A", "P_B"):
        return n * entry_width(n)
    return n


def _resolve_unitary(pauli) -> tuple[np.ndarray, str]:
    if isinstance(pauli, str):
        if pauli not in PAULIS:
            raise DomainError(f"unknown Pauli {pauli!r}; expected one of {sorted(PAULIS)}")
        return PAULIS[pauli], pauli
    return as_unitary(pauli), "U"


def outsider_tamper(config: SessionConfig, channel: str, wire: int, pauli, seed: int) -> AttackReport:
    """Apply ``pauli`` (a name in I/X/Y/Z or any 2x2 unitary) to ``wire`` on ``channel``."""
    if channel not in INTERCEPT_POINTS:
        raise DomainError(f"unknown channel {channel!r}; expected one of {INTERCEPT_POINTS}")
    width = channel_wire_count(config, channel)
    if not 0 <= wire < width:
        raise DomainError(f"wire {wire} outside the {width}-wire payload on {channel}")
    unitary, name = _resolve_unitary(pauli)
    hook = WireTamper(channel, wire, unitary, name)
    scenario = AttackScenario(OUTSIDER_TAMPER, seed, channel=channel, wire=wire, pauli=name)
    return _report(scenario, run_session(replace(config, seed=seed, tamper_hook=hook)))


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s) for s in np.random.default_rng(seed).integers(0, 2**31, size=trials)]


@dataclass(frozen=True)
class RateRow:
    scenario: str
    channel: str
    wire: str
    pauli: str
    trials: int
    detected: float

    def as_csv(self) -> tuple:
        return (self.scenario, self.channel, self.wire, self.pauli, self.trials, f"{self.detected:.4f}")


def tamper_sweep(
    config: SessionConfig,
    trials: int,
    seed: int,
    channels: Sequence[str] = SWEEP_CHANNELS,
    paulis: Sequence = ("I", "X", "Y", "Z"),
    wires: Iterable[int] | None = None,
) -> list[RateRow]:
    """Detection fraction per (channel, wire, Pauli) over ``trials`` session keys."""
    seeds = trial_seeds(seed, trials)
    rows = []
    for channel in channels:
        wire_range = range(channel_wire_count(config, channel)) if wires is None else list(wires)
        for wire in wire_range:
            for pauli in paulis:
                name = _resolve_unitary(pauli)[1]
                hits = sum(outsider_tamper(config, channel, wire, pauli, s).detected for s in seeds)
                rows.append(RateRow(OUTSIDER_TAMPER, channel, str(wire), name, trials, hits / trials))
    return rows


def forgery_rates(config: SessionConfig, trials: int, seed: int) -> list[RateRow]:
    seeds = trial_seeds(seed, trials)
    hits = sum(bob_forgery(config, s).detected for s in seeds)
    return [RateRow(BOB_FORGERY, "BT(S)", "-", "-", trials, hits / trials)]


def repudiation_rates(config: SessionConfig, trials: int, seed: int) -> list[RateRow]:
    seeds = trial_seeds(seed, trials)
    hits = sum(alice_repudiation(config, s).detected for s in seeds)
    return [RateRow(ALICE_REPUDIATION, "AT(I)", "-", "-", trials, hits / trials)]


def rates_csv(rows: Iterable[RateRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())
    return buf.getvalue()


"""Three-party sign/verify session between Alice, Bob and a blind Trent.

The session is a sequential state machine. Quantum payloads move between
parties through :meth:`SessionState.send`, which removes the payload from
the sender (no cloning), passes it through the optional tamper hook and
logs a digest of it. Keys come from an ideal pre-shared oracle.

Alice sends image material twice (directly to Bob, and via Trent), so she
encodes the classical image twice rather than copying a quantum state.
Bob needs the permutation before he can undo the permuted key schedule on
the direct route, so he requests it before decrypting ``A(S)``.
"""
from __future__ import annotations

import json
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .cipher import KEY_LABELS, KeyMaterial, decrypt_register, encrypt_register
from .errors import DomainError, MalformedNeqrState, MalformedPermutation
from .neqr import GrayscaleImage, NeqrLayout, SampledImage, decode_exact, encode, retrieve_sampled
from .permutation import (
    EncodedPermutation,
    Permutation,
    decode_state,
    decrypt_permutation,
    encode_state,
    encrypt_permutation,
    entry_width,
    generate,
    inverse_reorder,
    reorder,
    swap_network,
)
from .qft import apply_iqft, apply_qft
from .qsim import StateVector, fnv1a64

MAX_SESSION_WIRES = 16

Payload = Union[StateVector, EncodedPermutation]
TamperHook = Callable[[str, Payload], Payload]

# Quantum transmissions, in protocol order, plus the one internal intercept point.
CHANNELS = ("P_A", "A(S)", "AT(S)", "TB(S)", "P_B", "BT(S)", "AT(I)")
POST_DECRYPT = "post-decrypt"
INTERCEPT_POINTS = CHANNELS + (POST_DECRYPT,)


class Role(str, Enum):
    ALICE = "Alice"
    BOB = "Bob"
    TRENT = "Trent"


KEY_HOLDERS = {
    "AB": (Role.ALICE, Role.BOB),
    "TA": (Role.TRENT, Role.ALICE),
    "TB": (Role.TRENT, Role.BOB),
}


class Status(str, Enum):
    VALID = "Valid"
    REJECTED = "Rejected"
    ABORTED = "Aborted"
    INCONCLUSIVE = "Inconclusive"


class Reason(str, Enum):
    MALFORMED_PERMUTATION = "MalformedPermutation"
    MALFORMED_NEQR_STATE = "MalformedNeqrState"
    BOB_COMPARE_MISMATCH = "BobCompareMismatch"
    TRENT_COMPARE_MISMATCH = "TrentCompareMismatch"
    COVERAGE_INCONCLUSIVE = "CoverageInconclusive"


@dataclass(frozen=True)
class Verdict:
    status: Status
    reason: Reason | None = None
    detail: str = ""

    @property
    def valid(self) -> bool:
        return self.status is Status.VALID

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "reason": self.reason.value if self.reason else None,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Archive:
    image: GrayscaleImage
    signer: str = Role.ALICE.value

    def to_dict(self) -> dict:
        return {"signer": self.signer, "image": self.image.to_dict()}


@dataclass
class SessionConfig:
    """Everything that determines a session.

    ``bob_claim`` / ``alice_claim`` replace the image a party reports to
    Trent in the final cross-check; they model insider forgery and
    repudiation. ``keys`` and ``permutation`` replay recorded material.
    """

    image: GrayscaleImage
    seed: int
    mode: str = "exact"
    shots: int | None = None
    tamper_hook: TamperHook | None = None
    bob_claim: GrayscaleImage | None = None
    alice_claim: GrayscaleImage | None = None
    keys: Mapping[str, KeyMaterial] | None = None
    permutation: Permutation | None = None

    def __post_init__(self):
        if self.wire_count > MAX_SESSION_WIRES:
            raise DomainError(
                f"image needs N = q + 2n = {self.wire_count} wires, simulator limit is {MAX_SESSION_WIRES}"
            )
        if self.mode not in ("exact", "sampled"):
            raise DomainError(f"unknown retrieval mode {self.mode!r}")
        if self.mode == "sampled" and (self.shots is None or self.shots < 1):
            raise DomainError("sampled mode needs shots >= 1")
        for name in ("bob_claim", "alice_claim"):
            claim = getattr(self, name)
            if claim is not None and (claim.n, claim.q) != (self.image.n, self.image.q):
                raise DomainError(f"{name} must have the same shape and depth as the image")
        if self.keys:
            for label, key in self.keys.items():
                if label not in KEY_LABELS:
                    raise DomainError(f"unknown key label {label!r}")
                if key.piece_count != self.wire_count:
                    raise DomainError(f"key {label} has {len(key.bits)} bits, need {8 * self.wire_count}")
        if self.permutation is not None and self.permutation.size != self.wire_count:
            raise DomainError(f"permutation size {self.permutation.size} != N = {self.wire_count}")

    @property
    def layout(self) -> NeqrLayout:
        return self.image.layout

    @property
    def wire_count(self) -> int:
        return self.image.layout.wire_count

    def to_dict(self) -> dict:
        hook = self.tamper_hook
        return {
            "image": self.image.to_dict(),
            "seed": self.seed,
            "mode": self.mode,
            "shots": self.shots,
            "tamper": None if hook is None else getattr(hook, "label", "custom"),
            "bob_claim": None if self.bob_claim is None else self.bob_claim.to_dict(),
            "alice_claim": None if self.alice_claim is None else self.alice_claim.to_dict(),
            "replayed_keys": sorted(self.keys) if self.keys else [],
            "replayed_permutation": None if self.permutation is None else self.permutation.to_line(),
        }


@dataclass
class PartyState:
    role: Role
    held_keys: dict[str, KeyMaterial] = field(default_factory=dict)
    held_states: dict[str, Payload] = field(default_factory=dict)
    known_permutation: Permutation | None = None
    classical_records: dict[str, GrayscaleImage] = field(default_factory=dict)


def check_key_topology(parties: Mapping[Role, PartyState]) -> None:
    """Raise if a party holds a key it is not a party to."""
    for role, party in parties.items():
        for label in party.held_keys:
            if role not in KEY_HOLDERS[label]:
                raise AssertionError(f"{role.value} holds K_{label}")


def check_no_cloning(parties: Mapping[Role, PartyState]) -> None:
    owner: dict[int, str] = {}
    for role, party in parties.items():
        for slot, payload in party.held_states.items():
            key = id(payload)
            if key in owner:
                raise AssertionError(f"payload in {role.value}:{slot} also held at {owner[key]}")
            owner[key] = f"{role.value}:{slot}"


def payload_digest(payload: Payload) -> str:
    return fnv1a64(payload.to_bytes())


def ideal_qkd(pair: str, length: int, seed) -> KeyMaterial:
    """Trusted-setup stand-in for key distribution: ``length`` uniform bits."""
    if pair not in KEY_LABELS:
        raise DomainError(f"unknown key pair {pair!r}")
    if length < 8 or length % 8:
        raise DomainError(f"key length must be a positive multiple of 8, got {length}")
    return KeyMaterial.random(length // 8, seed, label=pair)


_STREAMS = {
    "key:AB": 1,
    "key:TA": 2,
    "key:TB": 3,
    "permutation": 4,
    "Bob:I~": 5,
    "Bob:I-": 6,
    "Trent:I-": 7,
    "Trent:I~": 8,
}


def session_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator per (session seed, named stream)."""
    return np.random.default_rng([_STREAMS[stream], int(seed)])


class _Halt(Exception):
    def __init__(self, verdict: Verdict):
        super().__init__(verdict.detail)
        self.verdict = verdict


@dataclass
class SessionTranscript:
    config: SessionConfig
    events: list[dict]
    verdict: Verdict
    archive: Archive | None = None
    records: dict[str, GrayscaleImage] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "events": self.events,
            "verdict": self.verdict.to_dict(),
            "archive": None if self.archive is None else self.archive.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


class SessionState:
    def __init__(self, config: SessionConfig):
        self.config = config
        self.layout = config.layout
        self.parties = {role: PartyState(role) for role in Role}
        self.events: list[dict] = []
        self.verdict: Verdict | None = None
        self.archive: Archive | None = None
        self.records: dict[str, GrayscaleImage] = {}
        self.phase = "initialization"
        self.completed: list[str] = []

    def __getitem__(self, role: Role) -> PartyState:
        return self.parties[role]

    def log(self, step: str, actor: str, action: str, **detail) -> None:
        check_key_topology(self.parties)
        check_no_cloning(self.parties)
        self.events.append(
            {"phase": self.phase, "step": step, "actor": actor, "action": action, "detail": detail}
        )

    def intercept(self, point: str, payload: Payload) -> Payload:
        hook = self.config.tamper_hook
        return payload if hook is None else hook(point, payload)

    def send(self, step: str, sender: Role, receiver: Role, slot: str) -> None:
        payload = self[sender].held_states.pop(slot)
        payload = self.intercept(slot, payload)
        self[receiver].held_states[slot] = payload
        self.log(step, sender.value, "send", slot=slot, to=receiver.value, digest=payload_digest(payload))

    def transcript(self) -> SessionTranscript:
        if self.verdict is None:
            raise DomainError("session has no verdict yet")
        return SessionTranscript(self.config, self.events, self.verdict, self.archive, dict(self.records))

    def readout(self, step: str, actor: Role, state: StateVector, record: str) -> SampledImage:
        """Retrieve an image from an NEQR register per the configured mode."""
        try:
            if self.config.mode == "exact":
                image = decode_exact(state, self.layout)
                result = SampledImage(image, np.ones((image.side, image.side), dtype=bool), 1.0)
            else:
                rng = session_rng(self.config.seed, f"{actor.value}:{record}")
                result = retrieve_sampled(state, self.layout, self.config.shots, rng)
        except MalformedNeqrState as exc:
            self.log(step, actor.value, "retrieve", record=record, error=str(exc))
            raise _Halt(Verdict(Status.REJECTED, Reason.MALFORMED_NEQR_STATE, f"{actor.value}: {exc}")) from None
        self[actor].classical_records[record] = result.image
        self.records[f"{actor.value}:{record}"] = result.image
        self.log(step, actor.value, "retrieve", record=record, coverage=result.coverage)
        return result

    def compare(self, step: str, actor: Role, left: SampledImage, right: SampledImage, reason: Reason) -> None:
        """Bob's / Trent's equality check; halts the session unless it passes."""
        agree = left.agrees_with(right)
        complete = left.complete and right.complete
        self.log(step, actor.value, "compare", equal=agree and complete, agree_on_observed=agree, complete=complete)
        if not agree:
            raise _Halt(Verdict(Status.REJECTED, reason, f"{actor.value}'s images differ"))
        if not complete:
            raise _Halt(
                Verdict(
                    Status.INCONCLUSIVE,
                    Reason.COVERAGE_INCONCLUSIVE,
                    f"{actor.value} observed coverage {min(left.coverage, right.coverage):.4f} < 1",
                )
            )


def _measure_permutation(session: SessionState, step: str, role: Role, slot: str, key_label: str) -> None:
    party = session[role]
    encoded = party.held_states.pop(slot)
    try:
        p = decode_state(decrypt_permutation(encoded, party.held_keys[key_label]))
    except MalformedPermutation as exc:
        session.log(step, role.value, "decrypt_measure_permutation", slot=slot, error=str(exc))
        raise _Halt(Verdict(Status.ABORTED, Reason.MALFORMED_PERMUTATION, f"{role.value}: {exc}")) from None
    party.known_permutation = p
    session.log(step, role.value, "decrypt_measure_permutation", slot=slot, key=key_label)


def _run_phase(session: SessionState, phase: str, body: Callable[[SessionState], None]) -> SessionState:
    if session.verdict is not None:
        return session
    expected = {"initialization": [], "signing": ["initialization"], "verification": ["initialization", "signing"]}
    if session.completed != expected[phase]:
        raise DomainError(f"{phase} phase cannot follow {session.completed}")
    session.phase = phase
    try:
        body(session)
    except _Halt as halt:
        session.verdict = halt.verdict
        session.log("-", "session", "halt", **halt.verdict.to_dict())
    session.completed.append(phase)
    return session


def _initialization(s: SessionState) -> None:
    cfg = s.config
    alice, trent = s[Role.ALICE], s[Role.TRENT]
    N = cfg.wire_count

    # (i) pairwise keys, 8N bits each
    for label in KEY_LABELS:
        if cfg.keys and label in cfg.keys:
            key = KeyMaterial(cfg.keys[label].bits, label)
        else:
            key = ideal_qkd(label, 8 * N, session_rng(cfg.seed, f"key:{label}"))
        for role in KEY_HOLDERS[label]:
            s[role].held_keys[label] = key
        s.log("i", "setup", "distribute_key", pair=label, bits=len(key.bits),
              holders=[r.value for r in KEY_HOLDERS[label]])

    # (ii) Alice's NEQR image
    alice.held_states["I"] = state = encode(cfg.image)
    s.log("ii", "Alice", "prepare_neqr", slot="I", wires=N, digest=payload_digest(state))

    # (iii) Trent's permutation and its two encrypted transfers
    p = cfg.permutation if cfg.permutation is not None else generate(N, session_rng(cfg.seed, "permutation"))
    trent.known_permutation = p
    s.log("iii", "Trent", "generate_permutation", size=N, entry_width=entry_width(N))
    encoded = encode_state(p)
    trent.held_states["P_A"] = encrypt_permutation(encoded, trent.held_keys["TA"])
    trent.held_states["P_B"] = encrypt_permutation(encode_state(p), trent.held_keys["TB"])
    s.log("iii", "Trent", "encrypt_permutation", slots=["P_A", "P_B"], keys=["TA", "TB"])
    s.send("iii", Role.TRENT, Role.ALICE, "P_A")

    # (iv) Alice learns P
    _measure_permutation(s, "iv", Role.ALICE, "P_A", "TA")

    # (v) QFT over the full register
    alice.held_states["QFT(I)"] = state = apply_qft(alice.held_states.pop("I"))
    s.log("v", "Alice", "apply_qft", slot="QFT(I)", digest=payload_digest(state))


def _signing(s: SessionState) -> None:
    alice = s[Role.ALICE]
    p = alice.known_permutation
    key_ab = alice.held_keys["AB"]

    state = reorder(alice.held_states.pop("QFT(I)"), p)
    alice.held_states["A(Q)"] = state
    s.log("i", "Alice", "reorder", slot="A(Q)", swaps=len(swap_network(p)), digest=payload_digest(state))

    state = encrypt_register(alice.held_states.pop("A(Q)"), key_ab, p.mapping)
    alice.held_states["A(S)"] = state
    s.log("ii", "Alice", "encrypt", slot="A(S)", key="AB", piece_order="permutation", digest=payload_digest(state))

    s.send("iii", Role.ALICE, Role.BOB, "A(S)")

    # (iv) second, independently prepared copy for the Trent route
    copy = apply_qft(encode(s.config.image))
    s.log("iv", "Alice", "prepare_copy", slot="QFT(I)#2", digest=payload_digest(copy))
    alice.held_states["AT(S)"] = state = encrypt_register(copy, key_ab)
    s.log("iv", "Alice", "encrypt", slot="AT(S)", key="AB", piece_order="identity", digest=payload_digest(state))
    s.send("iv", Role.ALICE, Role.TRENT, "AT(S)")

    trent = s[Role.TRENT]
    trent.held_states["TB(S)"] = state = encrypt_register(trent.held_states.pop("AT(S)"), trent.held_keys["TB"])
    s.log("v", "Trent", "encrypt", slot="TB(S)", key="TB", piece_order="identity", digest=payload_digest(state))
    s.send("v", Role.TRENT, Role.BOB, "TB(S)")


def _verification(s: SessionState) -> None:
    cfg = s.config
    alice, bob, trent = s[Role.ALICE], s[Role.BOB], s[Role.TRENT]

    # (i) Trent route
    state = decrypt_register(bob.held_states.pop("TB(S)"), bob.held_keys["TB"])
    s.log("i", "Bob", "decrypt", slot="TB(S)", key="TB", digest=payload_digest(state))
    state = decrypt_register(state, bob.held_keys["AB"])
    s.log("i", "Bob", "decrypt", slot="AT(S)", key="AB", digest=payload_digest(state))
    state = apply_iqft(state)
    s.log("i", "Bob", "inverse_qft", digest=payload_digest(state))
    bob_tilde = s.readout("i", Role.BOB, state, "I~")

    # (iii) permutation on request; needed to undo the permuted key schedule
    s.log("iii", "Bob", "request_permutation")
    s.send("iii", Role.TRENT, Role.BOB, "P_B")
    _measure_permutation(s, "iii", Role.BOB, "P_B", "TB")
    p = bob.known_permutation

    # (ii) direct route
    state = decrypt_register(bob.held_states.pop("A(S)"), bob.held_keys["AB"], p.mapping)
    s.log("ii", "Bob", "decrypt", slot="A(S)", key="AB", piece_order="permutation", digest=payload_digest(state))
    state = inverse_reorder(state, p)
    s.log("iii", "Bob", "inverse_reorder", digest=payload_digest(state))

    # (iv) compare and report to Trent
    state = s.intercept(POST_DECRYPT, apply_iqft(state))
    s.log("iv", "Bob", "inverse_qft", digest=payload_digest(state))
    bob_bar = s.readout("iv", Role.BOB, state, "I-")
    s.compare("iv", Role.BOB, bob_tilde, bob_bar, Reason.BOB_COMPARE_MISMATCH)
    s.log("iv", "Bob", "announce_valid")

    report = cfg.bob_claim if cfg.bob_claim is not None else bob_bar.image
    bob.held_states["BT(S)"] = state = encrypt_register(encode(report), bob.held_keys["TB"])
    s.log("iv", "Bob", "encrypt", slot="BT(S)", key="TB", digest=payload_digest(state))
    s.send("iv", Role.BOB, Role.TRENT, "BT(S)")

    # (v) Trent reads Bob's report
    state = decrypt_register(trent.held_states.pop("BT(S)"), trent.held_keys["TB"])
    s.log("v", "Trent", "decrypt", slot="BT(S)", key="TB", digest=payload_digest(state))
    trent_bar = s.readout("v", Role.TRENT, state, "I-")

    # (vi) Alice's own statement of the image
    s.log("vi", "Trent", "request_image", to="Alice")
    claim = cfg.alice_claim if cfg.alice_claim is not None else cfg.image
    alice.held_states["AT(I)"] = state = encrypt_register(encode(claim), alice.held_keys["TA"])
    s.log("vi", "Alice", "encrypt", slot="AT(I)", key="TA", digest=payload_digest(state))
    s.send("vi", Role.ALICE, Role.TRENT, "AT(I)")

    # (vii) arbitration and archive
    state = decrypt_register(trent.held_states.pop("AT(I)"), trent.held_keys["TA"])
    s.log("vii", "Trent", "decrypt", slot="AT(I)", key="TA", digest=payload_digest(state))
    trent_tilde = s.readout("vii", Role.TRENT, state, "I~")
    s.compare("vii", Role.TRENT, trent_tilde, trent_bar, Reason.TRENT_COMPARE_MISMATCH)

    s.archive = Archive(trent_tilde.image, Role.ALICE.value)
    s.log("vii", "Trent", "archive", signer="Alice")
    s.verdict = Verdict(Status.VALID)
    s.log("vii", "session", "verdict", **s.verdict.to_dict())


def initialization_phase(config: SessionConfig) -> SessionState:
    return _run_phase(SessionState(config), "initialization", _initialization)


def signing_phase(session: SessionState) -> SessionState:
    return _run_phase(session, "signing", _signing)


def verification_phase(session: SessionState) -> SessionTranscript:
    return _run_phase(session, "verification", _verification).transcript()


def run_session(config: SessionConfig) -> SessionTranscript:
    return verification_phase(signing_phase(initialization_phase(config)))

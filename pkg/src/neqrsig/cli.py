"""``neqrsig`` command line.

Exit codes: 0 success / Valid, 1 protocol-level rejection, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import adversary
from .cipher import KEY_LABELS, KeyMaterial
from .errors import DomainError
from .neqr import NeqrLayout, decode_exact, encode, random_image, read_pgm, retrieve_sampled, write_mask, write_pgm
from .permutation import Permutation
from .protocol import INTERCEPT_POINTS, Role, SessionConfig, initialization_phase, signing_phase, verification_phase
from .qft import max_circuit_deviation
from .qsim import PAULIS, load_qsv, save_qsv

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2
QFT_VERIFY_MAX_WIRES = 8
QFT_TOL = 1e-10


class UsageError(Exception):
    pass


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _load_image(path: str):
    if not Path(path).is_file():
        raise UsageError(f"image file not found: {path}")
    return read_pgm(path)


def parse_unitary(text: str) -> np.ndarray:
    """Four comma-separated complex entries (row-major), snapped to the nearest unitary."""
    try:
        entries = [complex(tok.strip().replace(" ", "")) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse unitary {text!r}") from None
    if len(entries) != 4:
        raise UsageError("a unitary needs exactly four entries")
    m = np.array(entries, dtype=complex).reshape(2, 2)
    w, _, vh = np.linalg.svd(m)
    u = w @ vh
    if np.abs(u - m).max() > 1e-3:
        raise UsageError(f"matrix {text!r} is not unitary")
    return u


def parse_tamper(text: str):
    """``CHANNEL:WIRE:PAULI`` -> tamper hook."""
    parts = text.rsplit(":", 2)
    if len(parts) != 3:
        raise UsageError(f"--tamper expects CHANNEL:WIRE:PAULI, got {text!r}")
    channel, wire, pauli = parts
    if channel not in INTERCEPT_POINTS:
        raise UsageError(f"unknown channel {channel!r}; choose from {', '.join(INTERCEPT_POINTS)}")
    if pauli not in PAULIS:
        raise UsageError(f"unknown Pauli {pauli!r}")
    try:
        wire = int(wire)
    except ValueError:
        raise UsageError(f"wire must be an integer, got {wire!r}") from None
    return channel, wire, pauli


def cmd_encode(args) -> int:
    image = _load_image(args.image)
    state = encode(image)
    save_qsv(state, args.out)
    print(f"N={state.wire_count} n={image.n} q={image.q}")
    return EXIT_OK


def cmd_decode(args) -> int:
    state = load_qsv(args.state)
    layout = NeqrLayout.for_wires(state.wire_count, args.q)
    if args.mode == "exact":
        write_pgm(decode_exact(state, layout), args.out)
        print(f"decoded {1 << layout.n}x{1 << layout.n} image, q={layout.q}")
        return EXIT_OK
    if args.shots is None or args.seed is None:
        raise UsageError("sampled decoding needs --shots and --seed")
    result = retrieve_sampled(state, layout, args.shots, args.seed)
    write_pgm(result.image, args.out)
    write_mask(result.observed, args.mask or f"{args.out}.mask")
    print(f"coverage={result.coverage:.4f}")
    return EXIT_OK


def cmd_qft_verify(args) -> int:
    if not 1 <= args.wires <= QFT_VERIFY_MAX_WIRES:
        raise UsageError(f"--wires must be in [1, {QFT_VERIFY_MAX_WIRES}], got {args.wires}")
    dev = max_circuit_deviation(args.wires, trials=args.trials, seed=args.seed)
    ok = dev <= QFT_TOL
    print(f"wires={args.wires} trials={args.trials} max_deviation={dev:.3e} {'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_REJECTED


def _replay_keys(specs) -> dict[str, KeyMaterial]:
    keys = {}
    for spec in specs or ():
        label, sep, path = spec.partition("=")
        if not sep or label not in KEY_LABELS:
            raise UsageError(f"--key-file expects LABEL=PATH with LABEL in {KEY_LABELS}, got {spec!r}")
        if not Path(path).is_file():
            raise UsageError(f"key file not found: {path}")
        keys[label] = KeyMaterial.load(path, label)
    return keys


def cmd_run(args) -> int:
    image = _load_image(args.image)
    if args.mode == "sampled" and args.shots is None:
        raise UsageError("--mode sampled needs --shots")
    hook = None
    if args.tamper:
        channel, wire, pauli = parse_tamper(args.tamper)
        hook = adversary.WireTamper(channel, wire, PAULIS[pauli], pauli)
    config = SessionConfig(
        image=image,
        seed=args.seed,
        mode=args.mode,
        shots=args.shots,
        tamper_hook=hook,
        bob_claim=_load_image(args.bob_claim) if args.bob_claim else None,
        alice_claim=_load_image(args.alice_claim) if args.alice_claim else None,
        keys=_replay_keys(args.key_file) or None,
        permutation=Permutation.load(args.perm_file) if args.perm_file else None,
    )
    session = initialization_phase(config)
    if args.save_material:
        out = Path(args.save_material)
        out.mkdir(parents=True, exist_ok=True)
        trent = session[Role.TRENT]
        keys = {**session[Role.ALICE].held_keys, **trent.held_keys}
        for label in KEY_LABELS:
            keys[label].save(out / f"key_{label}.hex")
        trent.known_permutation.save(out / "perm.txt")
    transcript = verification_phase(signing_phase(session))
    if args.report:
        Path(args.report).write_text(transcript.to_json())
    v = transcript.verdict
    print(f"verdict={v.status.value}" + (f" reason={v.reason.value}" if v.reason else ""))
    return EXIT_OK if v.valid else EXIT_REJECTED


def cmd_attack(args) -> int:
    if args.image:
        image = _load_image(args.image)
    else:
        image = random_image(1, 2, np.random.default_rng(args.seed))
    config = SessionConfig(image=image, seed=args.seed)
    if args.scenario == adversary.BOB_FORGERY:
        rows = adversary.forgery_rates(config, args.trials, args.seed)
    elif args.scenario == adversary.ALICE_REPUDIATION:
        rows = adversary.repudiation_rates(config, args.trials, args.seed)
    else:
        channels = args.channel or list(adversary.SWEEP_CHANNELS)
        for channel in channels:
            if channel not in INTERCEPT_POINTS:
                raise UsageError(f"unknown channel {channel!r}")
        if args.unitary:
            paulis = [parse_unitary(args.unitary)]
        else:
            paulis = args.pauli or ["I", "X", "Y", "Z"]
            bad = [p for p in paulis if p not in PAULIS]
            if bad:
                raise UsageError(f"unknown Pauli {bad}")
        rows = adversary.tamper_sweep(config, args.trials, args.seed, channels=channels, paulis=paulis)
    text = adversary.rates_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neqrsig", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="PGM image -> NEQR state (QSV1 file)")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="NEQR state (QSV1) -> PGM image")
    p.add_argument("--state", required=True)
    p.add_argument("--q", type=int, required=True, help="colour bit depth")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mask", help="observed-pixel sidecar (default: OUT.mask)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("qft-verify", help="compare the QFT circuit with its matrix")
    p.add_argument("--wires", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_qft_verify)

    p = sub.add_parser("run", help="run one sign/verify session")
    p.add_argument("--image", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--shots", type=int)
    p.add_argument("--report", help="write the JSON transcript here")
    p.add_argument("--tamper", metavar="CHANNEL:WIRE:PAULI")
    p.add_argument("--bob-claim", metavar="PGM", help="image Bob reports to Trent")
    p.add_argument("--alice-claim", metavar="PGM", help="image Alice reports to Trent")
    p.add_argument("--key-file", action="append", metavar="LABEL=PATH", help="replay a key (AB, TA or TB)")
    p.add_argument("--perm-file", help="replay Trent's permutation")
    p.add_argument("--save-material", metavar="DIR", help="write the session keys and permutation")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="run an attack suite and write a rate table")
    p.add_argument("--scenario", required=True, choices=adversary.SCENARIOS)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--image", help="PGM to sign (default: random 2x2, q=2, from the seed)")
    p.add_argument("--channel", action="append", help="outsider-tamper channel (repeatable)")
    p.add_argument("--pauli", action="append", help="outsider-tamper Pauli (repeatable)")
    p.add_argument("--unitary", help="arbitrary 2x2 tamper: four comma-separated complex entries")
    p.set_defaults(func=cmd_attack)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        return _fail("--trials must be >= 1")
    try:
        return args.func(args)
    except (UsageError, DomainError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())

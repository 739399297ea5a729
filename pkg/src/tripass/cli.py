"""Command-line surface: encrypt, decrypt, keygen, threepass, attack.

Exit codes: 0 success (attack: key broken), 1 attack reported the text as
resistant, 2 bad arguments or key, 3 input/output or network failure,
4 protocol failure reported by the peer.
"""

import argparse
import random
import sys

from . import kasiski, wire
from .cipher import DEFAULT_POLICY, KeyMode, TextPolicy, decrypt_text, encrypt_text, extend_key
from .errors import (
    EmptyKey,
    InsufficientData,
    InvalidCharacter,
    PolicyMismatch,
    ProtocolViolation,
    RemoteError,
    TimedOut,
)
from .kasiski import Verdict
from .protocol import new_session_id, run_local_exchange

EXIT_OK = 0
EXIT_RESISTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PROTOCOL = 4

_MODES = {"standard": KeyMode.STANDARD_REPEAT, "generated": KeyMode.GENERATED}


def _mode(args) -> KeyMode:
    return _MODES[args.mode]


def _policy(args) -> TextPolicy:
    return TextPolicy(non_alpha=args.non_alpha, case=args.case)


def _add_mode_policy(parser) -> None:
    parser.add_argument("--mode", choices=sorted(_MODES), default="generated",
                        help="key extension mode (default: generated)")
    parser.add_argument("--non-alpha", dest="non_alpha", choices=["preserve", "strip"],
                        default="preserve", help="non-alphabetic characters (default: preserve)")
    parser.add_argument("--case", choices=["upper", "preserve"], default="upper",
                        help="letter case handling (default: upper)")


def _add_input(parser) -> None:
    parser.add_argument("text", nargs="?", default=None, help="inline input text")
    parser.add_argument("--in", dest="infile", metavar="PATH", default=None,
                        help="read input from PATH, or - for stdin (default: stdin)")


def _read_input(args) -> str:
    if args.text is not None and args.infile is not None:
        raise SystemExit(_usage("give either inline text or --in, not both"))
    if args.text is not None:
        return args.text
    if args.infile is None or args.infile == "-":
        return sys.stdin.read()
    with open(args.infile, encoding="utf-8") as handle:
        return handle.read()


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _write_output(path: str | None, text: str) -> None:
    # Exact bytes out: no newline is appended, so decrypt(encrypt(x)) == x
    # holds byte for byte through files and pipes.
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _print_rows(rows, machine: bool) -> None:
    if machine:
        for key, value in rows:
            print(f"{key.lower().replace(' ', '_')}={value}")
    else:
        width = max(len(label) for label, _ in rows)
        for label, value in rows:
            print(f"{label:<{width}} : {value}")


def cmd_encrypt(args) -> int:
    _write_output(args.out, encrypt_text(_read_input(args), args.key, _mode(args), _policy(args)))
    return EXIT_OK


def cmd_decrypt(args) -> int:
    _write_output(args.out, decrypt_text(_read_input(args), args.key, _mode(args), _policy(args)))
    return EXIT_OK


def cmd_keygen(args) -> int:
    if args.length < 1:
        return _usage("--length must be >= 1")
    stream = extend_key(args.key, args.length, _mode(args))
    _write_output(args.out, stream.text + "\n")
    return EXIT_OK


def cmd_threepass_local(args) -> int:
    rng = random.Random(args.seed) if args.seed is not None else None
    transcript = run_local_exchange(
        _read_input(args), args.sender_key, args.recipient_key, _mode(args), _policy(args), rng=rng
    )
    _print_rows(
        [
            ("First Ciphertext", transcript.first_ciphertext),
            ("Second Ciphertext", transcript.second_ciphertext),
            ("Third Ciphertext", transcript.third_ciphertext),
            ("Plaintext", transcript.recovered),
        ],
        args.machine,
    )
    return EXIT_OK


def cmd_threepass_serve(args) -> int:
    host, port = wire.parse_address(args.listen)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "a", encoding="utf-8")

    def sink(text: str) -> None:
        out.write(text + "\n")
        out.flush()

    responder = wire.Responder(
        args.key, mode=_mode(args), policy=_policy(args),
        host=host, port=port, timeout=args.timeout, sink=sink,
    )
    bound = responder.address
    print(f"listening on {bound[0]}:{bound[1]}", file=sys.stderr)
    try:
        if args.once:
            responder.serve_once()
        else:
            responder.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        responder.close()
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_threepass_send(args) -> int:
    rng = random.Random(args.seed) if args.seed is not None else None
    transcript = wire.run_initiator(
        wire.parse_address(args.connect),
        args.key,
        _read_input(args),
        mode=_mode(args),
        policy=_policy(args),
        timeout=args.timeout,
        session_id=new_session_id(rng) if rng is not None else None,
    )
    _print_rows(
        [
            ("Session", transcript.session_id),
            ("First Ciphertext", transcript.first_ciphertext),
            ("Second Ciphertext", transcript.second_ciphertext),
            ("Third Ciphertext", transcript.third_ciphertext),
        ],
        args.machine,
    )
    if not args.machine:
        print("exchange complete")
    return EXIT_OK


def cmd_attack(args) -> int:
    table = kasiski.load_frequency_table(args.freq_table) if args.freq_table else None
    report = kasiski.attack(_read_input(args), threshold=args.threshold, table=table)
    candidates = ",".join(f"{length}:{score}" for length, score in report.key_length_candidates)
    iocs = ",".join(f"{length}:{ioc:.4f}" for length, ioc in sorted(report.ioc_by_length.items()))
    if args.machine:
        print(f"verdict={report.verdict.value}")
        print(f"recovered_key={report.recovered_key or ''}")
        print(f"score={'' if report.english_score is None else f'{report.english_score:.4f}'}")
        print(f"threshold={args.threshold}")
        print(f"candidates={candidates}")
        print(f"ioc={iocs}")
        print(f"findings={len(report.findings)}")
        print(f"decryption={report.recovered_text or ''}")
    else:
        print(f"verdict: {report.verdict.value}")
        if report.recovered_key is not None:
            print(f"recovered key: {report.recovered_key}")
            print(f"english deviation: {report.english_score:.3f} (break threshold {args.threshold})")
        print(f"key length candidates: {candidates or 'none'}")
        if iocs:
            print(f"index of coincidence by length: {iocs}")
        print(f"repeated n-grams: {len(report.findings)}")
        for finding in report.findings[:10]:
            offsets = ", ".join(str(p) for p in finding.positions)
            gaps = ", ".join(str(d) for d in finding.distances)
            print(f"  {finding.gram} at {offsets} (distances {gaps})")
        if report.recovered_text:
            preview = report.recovered_text[:60]
            print(f"decryption starts: {preview}")
    return EXIT_OK if report.verdict is Verdict.BROKEN else EXIT_RESISTED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripass",
        description="Vigenere cipher toolkit with generated key streams, "
        "a three-pass exchange protocol and Kasiski analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encrypt", help="encrypt text or a file")
    enc.add_argument("--key", required=True, help="alphabetic key")
    _add_mode_policy(enc)
    _add_input(enc)
    enc.add_argument("--out", metavar="PATH", default=None, help="write output to PATH (default: stdout)")
    enc.set_defaults(func=cmd_encrypt)

    dec = sub.add_parser("decrypt", help="decrypt text or a file")
    dec.add_argument("--key", required=True)
    _add_mode_policy(dec)
    _add_input(dec)
    dec.add_argument("--out", metavar="PATH", default=None)
    dec.set_defaults(func=cmd_decrypt)

    keygen = sub.add_parser("keygen", help="print an extended key stream")
    keygen.add_argument("--key", required=True)
    keygen.add_argument("--length", type=int, required=True, help="letters of key stream to emit")
    keygen.add_argument("--mode", choices=sorted(_MODES), default="generated")
    keygen.add_argument("--out", metavar="PATH", default=None)
    keygen.set_defaults(func=cmd_keygen, non_alpha="preserve", case="upper")

    tp = sub.add_parser("threepass", help="run the three-pass exchange")
    tp_sub = tp.add_subparsers(dest="subcommand", required=True)

    local = tp_sub.add_parser("local", help="run all three passes in-process and show the transcript")
    local.add_argument("--sender-key", required=True)
    local.add_argument("--recipient-key", required=True)
    _add_mode_policy(local)
    _add_input(local)
    local.add_argument("--seed", type=int, default=None, help="deterministic session ids")
    local.add_argument("--machine", action="store_true", help="key=value output")
    local.set_defaults(func=cmd_threepass_local)

    serve = tp_sub.add_parser("serve", help="listen and play the recipient")
    serve.add_argument("--listen", required=True, metavar="HOST:PORT")
    serve.add_argument("--key", required=True, help="the recipient's own key")
    _add_mode_policy(serve)
    serve.add_argument("--out", metavar="PATH", default=None, help="append recovered plaintexts here (default: stdout)")
    serve.add_argument("--timeout", type=float, default=wire.DEFAULT_TIMEOUT, metavar="SECS")
    serve.add_argument("--once", action="store_true", help="serve a single session, then exit")
    serve.set_defaults(func=cmd_threepass_serve)

    send = tp_sub.add_parser("send", help="connect and play the sender")
    send.add_argument("--connect", required=True, metavar="HOST:PORT")
    send.add_argument("--key", required=True, help="the sender's own key")
    _add_mode_policy(send)
    _add_input(send)
    send.add_argument("--timeout", type=float, default=wire.DEFAULT_TIMEOUT, metavar="SECS")
    send.add_argument("--seed", type=int, default=None, help="deterministic session ids")
    send.add_argument("--machine", action="store_true")
    send.set_defaults(func=cmd_threepass_send)

    atk = sub.add_parser("attack", help="run Kasiski analysis against a ciphertext")
    _add_input(atk)
    atk.add_argument("--threshold", type=float, default=kasiski.BREAK_THRESHOLD,
                     help="chi-squared per letter below which the decryption counts as English")
    atk.add_argument("--freq-table", metavar="PATH", default=None,
                     help="custom letter frequency table (26 lines of '<LETTER> <frequency>')")
    atk.add_argument("--machine", action="store_true", help="key=value output")
    atk.set_defaults(func=cmd_attack)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EmptyKey, InvalidCharacter, InsufficientData, ValueError) as exc:
        return _usage(str(exc))
    except (TimedOut, RemoteError, ProtocolViolation, PolicyMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()

"""Line-oriented wire codec and the two socket endpoints of an exchange.

One frame per line, ASCII header, linefeed-terminated:

    TPP/1 <session-id> <pass> <mode> <policy> <payload>\n

session-id is 16 hex digits chosen by the initiator and echoed verbatim,
pass is 1, 2 or 3, mode is GEN or STD, policy is two letters (non-alpha
handling P/S, then case handling U/P), and payload is standard base64 of
the ciphertext's UTF-8 bytes so spaces and newlines inside messages survive
line framing. A responder reports failure in-band with an error line:

    TPP/1 <session-id> ERR <reason>\n

One TCP connection carries one session; a responder serves connections
concurrently, each on its own thread.
"""

import base64
import binascii
import re
import socket
import threading
from dataclasses import dataclass

from .cipher import DEFAULT_POLICY, KeyMode, MessageText, TextPolicy, extend_key
from .errors import (
    FrameError,
    MalformedFrame,
    MalformedPayload,
    ProtocolViolation,
    RemoteError,
    TimedOut,
    TripassError,
    UnsupportedVersion,
)
from .protocol import Role, ThreePassSession, new_session_id

VERSION = "TPP/1"
ERR_TAG = "ERR"
ZERO_SESSION_ID = "0" * 16
DEFAULT_TIMEOUT = 10.0
_ACCEPT_POLL = 0.2  # how often the accept loop re-checks its stop flag

MODE_TAGS = {KeyMode.GENERATED: "GEN", KeyMode.STANDARD_REPEAT: "STD"}
_TAG_MODES = {tag: mode for mode, tag in MODE_TAGS.items()}
_NON_ALPHA_TAGS = {"preserve": "P", "strip": "S"}
_CASE_TAGS = {"upper": "U", "preserve": "P"}

_SESSION_ID_RE = re.compile(r"[0-9a-fA-F]{16}\Z")


def policy_tag(policy: TextPolicy) -> str:
    """Two-letter wire tag, e.g. preserve/upper -> 'PU'."""
    return _NON_ALPHA_TAGS[policy.non_alpha] + _CASE_TAGS[policy.case]


def parse_policy_tag(tag: str) -> TextPolicy:
    non_alpha = {v: k for k, v in _NON_ALPHA_TAGS.items()}
    case = {v: k for k, v in _CASE_TAGS.items()}
    if len(tag) == 2 and tag[0] in non_alpha and tag[1] in case:
        return TextPolicy(non_alpha[tag[0]], case[tag[1]])
    raise MalformedFrame(f"unknown policy tag {tag!r}", field="policy")


def _check_session_id(session_id: str) -> None:
    if not _SESSION_ID_RE.fullmatch(session_id):
        raise MalformedFrame(
            f"session id must be 16 hex digits, got {session_id!r}", field="session_id"
        )


@dataclass(frozen=True)
class Frame:
    """One payload-bearing line of the exchange."""

    session_id: str
    pass_number: int
    mode: KeyMode
    policy: TextPolicy
    payload: str

    def __post_init__(self):
        _check_session_id(self.session_id)
        if self.pass_number not in (1, 2, 3):
            raise MalformedFrame(
                f"pass number must be 1, 2 or 3, got {self.pass_number!r}", field="pass_number"
            )


@dataclass(frozen=True)
class ErrorFrame:
    """In-band failure report; closes the session."""

    session_id: str
    reason: str

    def __post_init__(self):
        _check_session_id(self.session_id)
        if "\n" in self.reason or "\r" in self.reason:
            raise MalformedFrame("error reason must be a single line", field="reason")


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame to its single wire line, linefeed included."""
    payload = base64.b64encode(frame.payload.encode("utf-8")).decode("ascii")
    line = (
        f"{VERSION} {frame.session_id} {frame.pass_number} "
        f"{MODE_TAGS[frame.mode]} {policy_tag(frame.policy)} {payload}\n"
    )
    return line.encode("ascii")


def encode_error(frame: ErrorFrame) -> bytes:
    return f"{VERSION} {frame.session_id} {ERR_TAG} {frame.reason}\n".encode("utf-8")


def decode_frame(data: bytes) -> Frame | ErrorFrame:
    """Parse one complete line back into a frame.

    Every failure raises a typed error naming the offending field; no input
    can crash the decoder.
    """
    try:
        line = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedFrame("frame is not valid UTF-8", field="line") from exc
    if line.endswith("\n"):
        line = line[:-1]
    if line.endswith("\r"):
        line = line[:-1]
    if "\n" in line or "\r" in line:
        raise MalformedFrame("frame must be a single line", field="line")
    if line == "":
        raise MalformedFrame("empty frame", field="line")
    fields = line.split(" ")
    if fields[0] != VERSION:
        raise UnsupportedVersion(f"unknown version tag {fields[0]!r}", field="version")
    if len(fields) >= 3 and fields[2] == ERR_TAG:
        if len(fields) < 4:
            raise MalformedFrame("error frame is missing its reason", field="reason")
        return ErrorFrame(fields[1], " ".join(fields[3:]))
    if len(fields) != 6:
        raise MalformedFrame(f"expected 6 fields, found {len(fields)}", field="field-count")
    _, session_id, pass_field, mode_tag, pol_tag, payload_field = fields
    if pass_field not in ("1", "2", "3"):
        raise MalformedFrame(
            f"pass number must be 1, 2 or 3, got {pass_field!r}", field="pass_number"
        )
    if mode_tag not in _TAG_MODES:
        raise MalformedFrame(f"unknown mode tag {mode_tag!r}", field="mode")
    policy = parse_policy_tag(pol_tag)
    try:
        payload = base64.b64decode(payload_field.encode("ascii"), validate=True).decode("utf-8")
    except (binascii.Error, ValueError, UnicodeError) as exc:
        raise MalformedPayload(f"payload is not base64 text: {exc}", field="payload") from exc
    return Frame(session_id, int(pass_field), _TAG_MODES[mode_tag], policy, payload)


def parse_address(text: str) -> tuple[str, int]:
    """Split a 'host:port' string; the port is mandatory."""
    host, sep, port_field = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"address must look like host:port, got {text!r}")
    try:
        port = int(port_field)
    except ValueError:
        raise ValueError(f"port must be an integer, got {port_field!r}") from None
    if not 0 <= port <= 65535:
        raise ValueError(f"port out of range: {port}")
    return host, port


@dataclass(frozen=True)
class WireTranscript:
    """The initiator's view of a completed exchange."""

    session_id: str
    first_ciphertext: str
    second_ciphertext: str
    third_ciphertext: str


class Responder:
    """Plays the recipient: read pass 1, answer pass 2, read pass 3, deliver.

    Each accepted connection carries exactly one session and runs on its own
    thread, so independent sessions interleave freely. Recovered plaintexts
    go to `sink` (a callable taking the text) and to `delivered`.
    """

    def __init__(
        self,
        key: str,
        *,
        mode: KeyMode = KeyMode.GENERATED,
        policy: TextPolicy = DEFAULT_POLICY,
        host: str = "127.0.0.1",
        port: int = 0,
        timeout: float = DEFAULT_TIMEOUT,
        sink=None,
    ):
        extend_key(key, 0, mode)  # fail fast on a bad key
        self._key = key
        self._mode = mode
        self._policy = policy
        self._timeout = timeout
        self._sink = sink
        try:
            self._server = socket.create_server((host, port))
        except OSError as exc:
            raise OSError(f"cannot listen on {host}:{port}: {exc}") from exc
        self._server.settimeout(_ACCEPT_POLL)
        self.delivered: list[tuple[str, str]] = []  # (session_id, plaintext)
        self.history: list[tuple[str, bytes]] = []  # ("recv"|"sent", line)
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self._workers: list[threading.Thread] = []

    @property
    def address(self) -> tuple[str, int]:
        return self._server.getsockname()[:2]

    def __enter__(self) -> "Responder":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def start(self) -> None:
        """Serve in a background thread; pair with `close`."""
        self._accept_thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._accept_thread.start()

    def serve_forever(self) -> None:
        """Accept and serve sessions until `close` is called."""
        while not self._stop.is_set():
            conn = self._accept()
            if conn is None:
                continue
            worker = threading.Thread(target=self._serve_connection, args=(conn,), daemon=True)
            worker.start()
            self._workers.append(worker)

    def serve_once(self) -> None:
        """Accept a single connection, serve its session, return."""
        while not self._stop.is_set():
            conn = self._accept()
            if conn is not None:
                self._serve_connection(conn)
                return

    def _accept(self):
        try:
            conn, _ = self._server.accept()
            return conn
        except TimeoutError:
            return None
        except OSError:
            self._stop.set()  # listener closed underneath us
            return None

    def close(self) -> None:
        self._stop.set()
        self._server.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
        for worker in self._workers:
            worker.join(timeout=2.0)

    # internal plumbing

    def _log(self, direction: str, line: bytes) -> None:
        with self._lock:
            self.history.append((direction, line))

    def _send(self, conn, data: bytes) -> None:
        conn.sendall(data)
        self._log("sent", data)

    def _send_error(self, conn, session_id: str, reason: str) -> None:
        try:
            self._send(conn, encode_error(ErrorFrame(session_id, reason)))
        except OSError:
            pass

    def _read_expected(self, reader, conn, expected_pass: int, expected_sid: str | None):
        """Read one line and insist it is a data frame for the expected pass."""
        try:
            line = reader.readline()
        except (TimeoutError, OSError):
            return None
        if not line:
            return None
        self._log("recv", line)
        try:
            frame = decode_frame(line)
        except FrameError as exc:
            self._send_error(conn, expected_sid or ZERO_SESSION_ID, f"bad frame: {exc}")
            return None
        if isinstance(frame, ErrorFrame):
            return None  # peer aborted
        if frame.pass_number != expected_pass:
            self._send_error(
                conn,
                frame.session_id,
                f"protocol violation: expected pass {expected_pass}, got pass {frame.pass_number}",
            )
            return None
        if expected_sid is not None and frame.session_id != expected_sid:
            self._send_error(conn, expected_sid, "protocol violation: session id changed mid-exchange")
            return None
        return frame

    def _serve_connection(self, conn) -> None:
        with conn:
            conn.settimeout(self._timeout)
            reader = conn.makefile("rb")
            try:
                opening = self._read_expected(reader, conn, expected_pass=1, expected_sid=None)
                if opening is None:
                    return
                sid = opening.session_id
                if opening.mode is not self._mode:
                    self._send_error(conn, sid, "mode mismatch")
                    return
                if opening.policy != self._policy:
                    self._send_error(conn, sid, "policy mismatch")
                    return
                session = ThreePassSession(Role.RECIPIENT, self._key, self._mode, self._policy, sid)
                first = MessageText.from_text(opening.payload, self._policy)
                second = session.recipient_pass2(first)
                self._send(conn, encode_frame(Frame(sid, 2, self._mode, self._policy, second.raw)))
                closing = self._read_expected(reader, conn, expected_pass=3, expected_sid=sid)
                if closing is None:
                    return
                third = MessageText.from_text(closing.payload, self._policy)
                plaintext = session.recipient_finish(third)
                with self._lock:
                    self.delivered.append((sid, plaintext.raw))
                if self._sink is not None:
                    self._sink(plaintext.raw)
            except (OSError, TripassError):
                return  # connection died or the peer misbehaved beyond repair


def run_responder(
    address,
    key: str,
    *,
    mode: KeyMode = KeyMode.GENERATED,
    policy: TextPolicy = DEFAULT_POLICY,
    sink=None,
    timeout: float = DEFAULT_TIMEOUT,
    once: bool = False,
) -> Responder:
    """Blocking convenience wrapper: listen on `address` and serve exchanges.

    `address` is a (host, port) pair or a 'host:port' string. With
    `once=True` the call returns after the first session completes.
    """
    if isinstance(address, str):
        address = parse_address(address)
    responder = Responder(
        key, mode=mode, policy=policy, host=address[0], port=address[1], timeout=timeout, sink=sink
    )
    try:
        if once:
            responder.serve_once()
        else:
            responder.serve_forever()
    finally:
        responder.close()
    return responder


def run_initiator(
    address,
    sender_key: str,
    plaintext: str,
    *,
    mode: KeyMode = KeyMode.GENERATED,
    policy: TextPolicy = DEFAULT_POLICY,
    timeout: float = DEFAULT_TIMEOUT,
    session_id: str | None = None,
) -> WireTranscript:
    """Run the sender side of one exchange against a responder.

    Sends pass 1, receives pass 2, sends pass 3, then waits for the peer to
    close the connection cleanly (or to report an in-band error). The
    responder ends up holding the plaintext; the initiator only learns that
    the exchange completed.
    """
    if isinstance(address, str):
        address = parse_address(address)
    sid = session_id if session_id is not None else new_session_id()
    session = ThreePassSession(Role.SENDER, sender_key, mode, policy, sid)
    message = MessageText.from_text(plaintext, policy)
    first = session.sender_pass1(message)  # fail before connecting; no partial frames
    try:
        sock = socket.create_connection(address, timeout=timeout)
    except TimeoutError as exc:
        raise TimedOut(f"connecting to {address[0]}:{address[1]}") from exc
    except OSError as exc:
        raise OSError(f"cannot connect to {address[0]}:{address[1]}: {exc}") from exc
    with sock:
        sock.settimeout(timeout)
        reader = sock.makefile("rb")
        sock.sendall(encode_frame(Frame(sid, 1, mode, policy, first.raw)))
        reply = _read_reply(reader, address, "pass 2")
        if isinstance(reply, ErrorFrame):
            raise RemoteError(reply.reason)
        if reply.pass_number != 2:
            raise ProtocolViolation(f"expected pass 2, responder sent pass {reply.pass_number}")
        if reply.session_id != sid:
            raise ProtocolViolation("responder echoed a different session id")
        second = MessageText.from_text(reply.payload, policy)
        third = session.sender_pass3(second)
        sock.sendall(encode_frame(Frame(sid, 3, mode, policy, third.raw)))
        _await_clean_close(reader, address)
    return WireTranscript(sid, first.raw, second.raw, third.raw)


def _read_reply(reader, address, what: str) -> Frame | ErrorFrame:
    try:
        line = reader.readline()
    except TimeoutError as exc:
        raise TimedOut(f"waiting for {what} from {address[0]}:{address[1]}") from exc
    if not line:
        raise RemoteError(f"connection closed before {what}")
    return decode_frame(line)


def _await_clean_close(reader, address) -> None:
    """After pass 3 the responder either closes cleanly or reports an error."""
    try:
        line = reader.readline()
    except TimeoutError as exc:
        raise TimedOut(f"waiting for completion from {address[0]}:{address[1]}") from exc
    if not line:
        return
    tail = decode_frame(line)
    if isinstance(tail, ErrorFrame):
        raise RemoteError(tail.reason)
    raise ProtocolViolation("responder sent an unexpected frame after pass 3")

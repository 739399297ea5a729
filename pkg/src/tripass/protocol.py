"""Three-pass exchange: each party keeps its own key, three ciphertexts travel.

The sender encrypts with its own key (pass 1), the recipient encrypts the
result again with its own key (pass 2), the sender strips its layer off
(pass 3), and the recipient strips the last layer to read the message. No
key ever leaves its owner. This works because per-letter addition mod 26
commutes: the sender can remove its layer from underneath the recipient's.

Each party re-derives its key stream from its user key and the message's
letter count at every pass. All three ciphertexts share the plaintext's
letter count and mask, so the streams line up and pass 3 undoes pass 1.
"""

import secrets
from dataclasses import dataclass
from enum import Enum

from .cipher import (
    DEFAULT_POLICY,
    KeyMode,
    KeyStream,
    MessageText,
    TextPolicy,
    decrypt,
    encrypt,
    extend_key,
)
from .errors import PolicyMismatch, ProtocolViolation


class Role(Enum):
    SENDER = "sender"
    RECIPIENT = "recipient"


class Phase(Enum):
    AWAIT_START = "await-start"
    AWAIT_PASS1 = "await-pass1"
    AWAIT_PASS2 = "await-pass2"
    AWAIT_PASS3 = "await-pass3"
    DONE = "done"


def new_session_id(rng=None) -> str:
    """16 hex digits; pass a `random.Random` to make ids reproducible."""
    if rng is None:
        return secrets.token_hex(8)
    return f"{rng.getrandbits(64):016x}"


class ThreePassSession:
    """One party's view of a single exchange.

    The phase moves strictly forward and every step checks role and phase
    first, so an out-of-order, repeated or wrong-party pass raises
    ProtocolViolation instead of producing garbage. The key stays inside
    the session; only ciphertexts come out.
    """

    def __init__(
        self,
        role: Role,
        key: str,
        mode: KeyMode = KeyMode.GENERATED,
        policy: TextPolicy = DEFAULT_POLICY,
        session_id: str | None = None,
    ):
        extend_key(key, 0, mode)  # reject empty or non-alphabetic keys up front
        self.role = role
        self.mode = mode
        self.policy = policy
        self.session_id = session_id if session_id is not None else new_session_id()
        self.phase = Phase.AWAIT_START if role is Role.SENDER else Phase.AWAIT_PASS1
        self.result: MessageText | None = None
        self._key = key

    def _require(self, role: Role, phase: Phase) -> None:
        if self.role is not role:
            raise ProtocolViolation(
                f"step belongs to the {role.value}, this session is the {self.role.value}"
            )
        if self.phase is not phase:
            raise ProtocolViolation(
                f"step requires phase {phase.value}, session is in {self.phase.value}"
            )

    def _check_policy(self, message: MessageText) -> None:
        if message.policy != self.policy:
            raise PolicyMismatch(
                "message was normalized under a different text policy than this session uses"
            )

    def _stream(self, message: MessageText) -> KeyStream:
        return extend_key(self._key, message.letter_count, self.mode)

    def sender_pass1(self, plaintext: MessageText) -> MessageText:
        """Pass 1: encrypt the message under the sender's own key."""
        self._require(Role.SENDER, Phase.AWAIT_START)
        self._check_policy(plaintext)
        first = encrypt(plaintext, self._stream(plaintext))
        self.phase = Phase.AWAIT_PASS2
        return first

    def recipient_pass2(self, first_ciphertext: MessageText) -> MessageText:
        """Pass 2: encrypt the incoming ciphertext again under the recipient's key."""
        self._require(Role.RECIPIENT, Phase.AWAIT_PASS1)
        self._check_policy(first_ciphertext)
        second = encrypt(first_ciphertext, self._stream(first_ciphertext))
        self.phase = Phase.AWAIT_PASS3
        return second

    def sender_pass3(self, second_ciphertext: MessageText) -> MessageText:
        """Pass 3: the sender removes its own layer, leaving only the recipient's."""
        self._require(Role.SENDER, Phase.AWAIT_PASS2)
        self._check_policy(second_ciphertext)
        third = decrypt(second_ciphertext, self._stream(second_ciphertext))
        self.phase = Phase.DONE
        return third

    def recipient_finish(self, third_ciphertext: MessageText) -> MessageText:
        """Final step: the recipient removes its layer and recovers the plaintext."""
        self._require(Role.RECIPIENT, Phase.AWAIT_PASS3)
        self._check_policy(third_ciphertext)
        plaintext = decrypt(third_ciphertext, self._stream(third_ciphertext))
        self.phase = Phase.DONE
        self.result = plaintext
        return plaintext


@dataclass(frozen=True)
class ExchangeTranscript:
    """Everything that crossed the wire in one exchange, plus the outcome."""

    session_id: str
    plaintext: str
    first_ciphertext: str
    second_ciphertext: str
    third_ciphertext: str
    recovered: str


def run_local_exchange(
    plaintext: str,
    sender_key: str,
    recipient_key: str,
    mode: KeyMode = KeyMode.GENERATED,
    policy: TextPolicy = DEFAULT_POLICY,
    *,
    sender_mode: KeyMode | None = None,
    recipient_mode: KeyMode | None = None,
    sender_policy: TextPolicy | None = None,
    recipient_policy: TextPolicy | None = None,
    session_id: str | None = None,
    rng=None,
) -> ExchangeTranscript:
    """Drive all four steps in one process and record every ciphertext.

    The per-party overrides let tests exercise disagreement. A policy
    disagreement garbles the text (different normalization between passes)
    and raises PolicyMismatch. A key-mode disagreement, perhaps
    surprisingly, is harmless here: each party applies and later removes
    its own stream, so the modes never have to match for the math to
    cancel. The wire layer still rejects mixed modes as a protocol matter.
    """
    sid = session_id if session_id is not None else new_session_id(rng)
    sender = ThreePassSession(Role.SENDER, sender_key, sender_mode or mode, sender_policy or policy, sid)
    recipient = ThreePassSession(
        Role.RECIPIENT, recipient_key, recipient_mode or mode, recipient_policy or policy, sid
    )
    message = MessageText.from_text(plaintext, sender_policy or policy)
    first = sender.sender_pass1(message)
    second = recipient.recipient_pass2(first)
    third = sender.sender_pass3(second)
    recovered = recipient.recipient_finish(third)
    if recovered.raw != message.raw:
        raise PolicyMismatch(
            "recovered text does not match the input; the parties used different key modes or policies"
        )
    return ExchangeTranscript(sid, message.raw, first.raw, second.raw, third.raw, recovered.raw)

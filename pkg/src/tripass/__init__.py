"""Vigenere cipher toolkit: generated key streams, a three-pass exchange
protocol with a TCP transport, and Kasiski cryptanalysis."""

from .cipher import (
    ALPHABET,
    ALPHABET_SIZE,
    DEFAULT_POLICY,
    KeyMode,
    KeyStream,
    MessageText,
    TextPolicy,
    char_to_index,
    decrypt,
    decrypt_text,
    encrypt,
    encrypt_text,
    extend_key,
    index_to_char,
)
from .errors import (
    EmptyKey,
    FrameError,
    InsufficientData,
    InvalidCharacter,
    KeyLengthMismatch,
    MalformedFrame,
    MalformedPayload,
    PolicyMismatch,
    ProtocolViolation,
    RemoteError,
    TimedOut,
    TransportError,
    TripassError,
    UnsupportedVersion,
)
from .kasiski import (
    KasiskiReport,
    RepeatFinding,
    Verdict,
    attack,
    average_column_ioc,
    english_deviation,
    english_frequencies,
    estimate_key_lengths,
    extract_letters,
    find_repeats,
    index_of_coincidence,
    load_frequency_table,
    recover_key,
)
from .protocol import (
    ExchangeTranscript,
    Phase,
    Role,
    ThreePassSession,
    new_session_id,
    run_local_exchange,
)
from .wire import (
    ErrorFrame,
    Frame,
    Responder,
    WireTranscript,
    decode_frame,
    encode_error,
    encode_frame,
    parse_address,
    run_initiator,
    run_responder,
)

__version__ = "0.1.0"

"""Vigenere cipher core: the 26-letter alphabet, key streams, encrypt/decrypt.

Everything here works on letter indices 0..25 (0 = A, 25 = Z). Encryption
adds the key index to the plaintext index mod 26, decryption subtracts it;
the classic lookup table is exactly this arithmetic. Keys shorter than the
message are stretched either by plain repetition or by an arithmetic
generator that never repeats the key verbatim (see `extend_key`).
"""

import string
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyKey, InvalidCharacter, KeyLengthMismatch

ALPHABET = string.ascii_uppercase
ALPHABET_SIZE = 26

NON_ALPHA_POLICIES = ("preserve", "strip")
CASE_POLICIES = ("upper", "preserve")


class KeyMode(Enum):
    """How a short user key grows to cover the whole message."""

    STANDARD_REPEAT = "standard"
    GENERATED = "generated"


@dataclass(frozen=True)
class TextPolicy:
    """What happens to non-alphabetic characters and to letter case.

    non_alpha: "preserve" copies digits, punctuation and whitespace through
    unchanged (they consume no key material); "strip" drops them.
    case: "upper" folds everything to uppercase; "preserve" encrypts the
    uppercased letter but re-applies the original case to the output, which
    keeps round trips lossless on mixed-case text.
    """

    non_alpha: str = "preserve"
    case: str = "upper"

    def __post_init__(self):
        if self.non_alpha not in NON_ALPHA_POLICIES:
            raise ValueError(f"non_alpha policy must be one of {NON_ALPHA_POLICIES}, got {self.non_alpha!r}")
        if self.case not in CASE_POLICIES:
            raise ValueError(f"case policy must be one of {CASE_POLICIES}, got {self.case!r}")


DEFAULT_POLICY = TextPolicy()


def char_to_index(c: str) -> int:
    """Alphabet index of a letter: 'A' -> 0 through 'Z' -> 25.

    Lowercase input is accepted and treated as its uppercase form. Anything
    that is not a single ASCII letter raises InvalidCharacter.
    """
    if len(c) == 1:
        if "A" <= c <= "Z":
            return ord(c) - ord("A")
        if "a" <= c <= "z":
            return ord(c) - ord("a")
    raise InvalidCharacter(f"not an ASCII letter: {c!r}")


def index_to_char(i: int) -> str:
    """Letter for an alphabet index, inverse of `char_to_index`."""
    if not 0 <= i < ALPHABET_SIZE:
        raise ValueError(f"letter index out of range [0, 25]: {i}")
    return ALPHABET[i]


def _is_ascii_letter(c: str) -> bool:
    return ("A" <= c <= "Z") or ("a" <= c <= "z")


@dataclass(frozen=True)
class MessageText:
    """A piece of text split into encryptable letters and passthrough characters.

    `raw` is the text after policy normalization. `mask[i]` is True where
    `raw[i]` is a letter that takes part in encryption; `letters` holds those
    positions' alphabet indices in order. Reassembling the letters and the
    passthrough characters along the mask reproduces `raw` exactly, which is
    what keeps spacing and punctuation stable across encrypt/decrypt.
    """

    raw: str
    letters: tuple[int, ...]
    mask: tuple[bool, ...]
    policy: TextPolicy = DEFAULT_POLICY

    def __post_init__(self):
        if len(self.mask) != len(self.raw):
            raise ValueError("mask must mark every raw position")
        if len(self.letters) != sum(self.mask):
            raise ValueError("letters must match the number of letter positions in the mask")
        if any(not 0 <= v < ALPHABET_SIZE for v in self.letters):
            raise ValueError("letter indices must lie in [0, 25]")

    @classmethod
    def from_text(cls, text: str, policy: TextPolicy = DEFAULT_POLICY) -> "MessageText":
        """Apply `policy` to `text` and split it into letters and passthrough."""
        chars: list[str] = []
        letters: list[int] = []
        mask: list[bool] = []
        for ch in text:
            if not _is_ascii_letter(ch):
                # Non-ASCII alphabetics count as passthrough too; only A-Z encrypt.
                if policy.non_alpha == "strip":
                    continue
                chars.append(ch)
                mask.append(False)
                continue
            idx = char_to_index(ch)
            letters.append(idx)
            mask.append(True)
            chars.append(ALPHABET[idx] if policy.case == "upper" else ch)
        return cls("".join(chars), tuple(letters), tuple(mask), policy)

    @property
    def letter_count(self) -> int:
        return len(self.letters)

    @property
    def letter_text(self) -> str:
        """The letter positions alone, as uppercase text."""
        return "".join(ALPHABET[i] for i in self.letters)

    def with_letters(self, new_letters) -> "MessageText":
        """Same mask, policy and passthrough characters, new letter values."""
        new_letters = tuple(new_letters)
        if len(new_letters) != len(self.letters):
            raise ValueError("replacement letters must match the letter count")
        out: list[str] = []
        k = 0
        for pos, is_letter in enumerate(self.mask):
            if not is_letter:
                out.append(self.raw[pos])
                continue
            ch = ALPHABET[new_letters[k]]
            if self.policy.case == "preserve" and self.raw[pos].islower():
                ch = ch.lower()
            out.append(ch)
            k += 1
        return MessageText("".join(out), new_letters, self.mask, self.policy)


@dataclass(frozen=True)
class KeyStream:
    """Key material stretched to cover every letter of a message.

    `extended` always satisfies the mode's rule against `user_key`, so a
    stream that was not produced by `extend_key` (or does not follow the
    same recurrence) is rejected at construction.
    """

    user_key: tuple[int, ...]
    extended: tuple[int, ...]
    mode: KeyMode

    def __post_init__(self):
        if not self.user_key:
            raise EmptyKey("key must contain at least one letter")
        if any(not 0 <= v < ALPHABET_SIZE for v in self.user_key + self.extended):
            raise ValueError("key indices must lie in [0, 25]")
        n = len(self.user_key)
        for i, v in enumerate(self.extended):
            if self.mode is KeyMode.STANDARD_REPEAT:
                want = self.user_key[i % n]
            elif i < n:
                want = self.user_key[i]
            else:
                want = (self.extended[i - 1] + i) % ALPHABET_SIZE
            if v != want:
                raise ValueError(f"extended stream breaks the {self.mode.value} rule at position {i}")

    def __len__(self) -> int:
        return len(self.extended)

    @property
    def text(self) -> str:
        return "".join(ALPHABET[i] for i in self.extended)

    @property
    def user_key_text(self) -> str:
        return "".join(ALPHABET[i] for i in self.user_key)


def extend_key(user_key: str, target_len: int, mode: KeyMode = KeyMode.GENERATED) -> KeyStream:
    """Stretch `user_key` to exactly `target_len` letters.

    STANDARD_REPEAT cycles the key: extended[i] = key[i mod len(key)].
    GENERATED keeps the key as a prefix and continues it arithmetically,
    extended[i] = (extended[i-1] + i) mod 26 with 0-based i, so repeated
    plaintext blocks no longer meet identical key blocks. A key at least as
    long as the target is truncated in both modes; a zero target yields an
    empty stream (the degenerate all-passthrough message needs one).
    """
    if user_key == "":
        raise EmptyKey("key must contain at least one letter")
    base = tuple(char_to_index(c) for c in user_key)
    if target_len < 0:
        raise ValueError(f"target length must be >= 0, got {target_len}")
    if target_len <= len(base):
        return KeyStream(base, base[:target_len], mode)
    ext = list(base)
    if mode is KeyMode.STANDARD_REPEAT:
        for i in range(len(base), target_len):
            ext.append(base[i % len(base)])
    else:
        for i in range(len(base), target_len):
            ext.append((ext[i - 1] + i) % ALPHABET_SIZE)
    return KeyStream(base, tuple(ext), mode)


def _check_lengths(message: MessageText, key: KeyStream) -> None:
    if len(key.extended) != message.letter_count:
        raise KeyLengthMismatch(
            f"key stream covers {len(key.extended)} letters, message has {message.letter_count}"
        )


def encrypt(plaintext: MessageText, key: KeyStream) -> MessageText:
    """Shift every letter forward by its key letter, mod 26.

    Passthrough positions are copied verbatim and consume no key letter;
    the output mask equals the input mask.
    """
    _check_lengths(plaintext, key)
    return plaintext.with_letters(
        (p + k) % ALPHABET_SIZE for p, k in zip(plaintext.letters, key.extended)
    )


def decrypt(ciphertext: MessageText, key: KeyStream) -> MessageText:
    """Shift every letter back by its key letter, mod 26. Inverse of `encrypt`."""
    _check_lengths(ciphertext, key)
    return ciphertext.with_letters(
        (c - k) % ALPHABET_SIZE for c, k in zip(ciphertext.letters, key.extended)
    )


def encrypt_text(
    text: str,
    key: str,
    mode: KeyMode = KeyMode.GENERATED,
    policy: TextPolicy = DEFAULT_POLICY,
) -> str:
    """Convenience wrapper: normalize `text`, derive the key stream, encrypt."""
    message = MessageText.from_text(text, policy)
    stream = extend_key(key, message.letter_count, mode)
    return encrypt(message, stream).raw


def decrypt_text(
    text: str,
    key: str,
    mode: KeyMode = KeyMode.GENERATED,
    policy: TextPolicy = DEFAULT_POLICY,
) -> str:
    """Convenience wrapper: normalize `text`, derive the key stream, decrypt."""
    message = MessageText.from_text(text, policy)
    stream = extend_key(key, message.letter_count, mode)
    return decrypt(message, stream).raw

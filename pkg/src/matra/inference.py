"""Greedy decoding and the two-stage Indic-to-Indic pipeline.

When English is one endpoint a request is a single decoder pass. Between
two Indic scripts the word is first decoded to English (stage one), and
that intermediate word is fed back through the public single-stage path
with the real target token (stage two), so an explicit two-call
composition is bit-identical by construction.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

import numpy as np

from .corpus import EOS_ID, Vocabulary
from .languages import Language, first_foreign_char
from .model import decode_logits, encode
from .training import Checkpoint


class InferenceError(Exception):
    pass


class InvalidRequestError(InferenceError):
    """Structurally bad request: empty text or an impossible language pair."""


class ScriptValidationError(InferenceError):
    def __init__(self, word: str, char: str, lang: Language, word_index: int = 0):
        super().__init__(
            f"word {word_index} ({word!r}): character {char!r} (U+{ord(char):04X}) "
            f"is not in the {lang.value} script"
        )
        self.word = word
        self.char = char
        self.lang = lang
        self.word_index = word_index


@dataclass(frozen=True)
class TransliterationRequest:
    text: str
    source_lang: Language
    target_lang: Language


@dataclass(frozen=True)
class TransliterationResult:
    """Per-word outputs; `intermediates` is set only for Indic-to-Indic."""

    output: str
    words: tuple[str, ...]
    intermediates: tuple[str, ...] | None
    decode_lengths: tuple[int, ...]
    flags: tuple[str, ...] = field(default=())


def greedy_decode(ckpt: Checkpoint, src_ids, target_lang: Language, max_len: int | None = None) -> list[int]:
    """Decode by repeated argmax (ties resolve to the lowest token id).

    The decoder prefix is seeded with the target language's token; decoding
    stops at `<EOS>` or when the prefix fills max_len. The language token
    and the end token are stripped from the returned ids.
    """
    max_len = ckpt.config.max_seq_len if max_len is None else min(max_len, ckpt.config.max_seq_len)
    memory = encode(ckpt.params, np.asarray(src_ids, dtype=np.int64))
    prefix = [ckpt.vocab.id_of(target_lang.token)]
    while len(prefix) < max_len:
        logits = decode_logits(ckpt.params, memory, np.asarray(prefix, dtype=np.int64))
        next_id = int(np.argmax(logits.data[-1]))
        if next_id == EOS_ID:
            break
        prefix.append(next_id)
    return prefix[1:]


def _word_to_src_ids(word: str, vocab: Vocabulary, target_lang: Language) -> tuple[list[int], list[str]]:
    ids = [vocab.id_of(target_lang.token)]
    unknown = []
    for ch in word:
        if ch not in vocab:
            unknown.append(ch)
        ids.append(vocab.id_or_unk(ch))
    ids.append(EOS_ID)
    return ids, unknown


def greedy_decode_word(ckpt: Checkpoint, word: str, target_lang: Language, max_len: int | None = None) -> str:
    """Decode a single source word to a target-language string."""
    src_ids, _ = _word_to_src_ids(word, ckpt.vocab, target_lang)
    src_ids = src_ids[: ckpt.config.max_seq_len - 1] + [EOS_ID] if len(src_ids) > ckpt.config.max_seq_len else src_ids
    out_ids = greedy_decode(ckpt, src_ids, target_lang, max_len)
    return "".join(ckpt.vocab.id_to_token[i] for i in out_ids)


def _normalize_word(word: str, lang: Language) -> str:
    word = unicodedata.normalize("NFC", word)
    return word.upper() if lang is Language.ENGLISH else word


def _decode_stage(ckpt: Checkpoint, word: str, target_lang: Language, word_index: int, stage: str) -> tuple[str, int, list[str]]:
    flags: list[str] = []
    src_ids, unknown = _word_to_src_ids(word, ckpt.vocab, target_lang)
    if len(src_ids) > ckpt.config.max_seq_len:
        src_ids = src_ids[: ckpt.config.max_seq_len - 1] + [EOS_ID]
        flags.append(f"word {word_index}: input truncated to {ckpt.config.max_seq_len} tokens")
    for ch in unknown:
        flags.append(f"word {word_index}: character {ch!r} not in vocabulary, used <UNK>")
    out_ids = greedy_decode(ckpt, src_ids, target_lang)
    decoded = "".join(ckpt.vocab.id_to_token[i] for i in out_ids)
    if not decoded:
        flags.append(f"word {word_index}: {stage} decode is empty")
    else:
        foreign = first_foreign_char(decoded, target_lang)
        if foreign is not None:
            flags.append(
                f"word {word_index}: {stage} contains {foreign!r} outside the {target_lang.value} script"
            )
    return decoded, len(out_ids), flags


def transliterate_word(
    ckpt: Checkpoint,
    word: str,
    source_lang: Language,
    target_lang: Language,
    word_index: int = 0,
) -> TransliterationResult:
    """Transliterate one word, chaining through English when neither
    endpoint is English. Out-of-script output characters are kept but
    flagged rather than repaired."""
    if source_lang is target_lang:
        raise InvalidRequestError("source and target language must differ")
    word = _normalize_word(word, source_lang)
    if not word:
        raise InvalidRequestError("empty word")
    bad = first_foreign_char(word, source_lang)
    if bad is not None:
        raise ScriptValidationError(word, bad, source_lang, word_index)

    if Language.ENGLISH in (source_lang, target_lang):
        decoded, n, flags = _decode_stage(ckpt, word, target_lang, word_index, "output")
        return TransliterationResult(decoded, (decoded,), None, (n,), tuple(flags))

    intermediate, _, stage1_flags = _decode_stage(ckpt, word, Language.ENGLISH, word_index, "intermediate")
    stage1_flags = [f.replace("output", "intermediate") for f in stage1_flags]
    second = transliterate_word(ckpt, intermediate, Language.ENGLISH, target_lang, word_index)
    return TransliterationResult(
        second.output,
        second.words,
        (intermediate,),
        second.decode_lengths,
        tuple(stage1_flags) + second.flags,
    )


def transliterate_text(ckpt: Checkpoint, request: TransliterationRequest) -> TransliterationResult:
    """Transliterate each whitespace-separated word independently and
    rejoin with single spaces; the word count never changes."""
    if request.source_lang is request.target_lang:
        raise InvalidRequestError("source and target language must differ")
    words = request.text.split()
    if not words:
        raise InvalidRequestError("empty text")

    out_words: list[str] = []
    intermediates: list[str] = []
    lengths: list[int] = []
    flags: list[str] = []
    for i, word in enumerate(words):
        result = transliterate_word(ckpt, word, request.source_lang, request.target_lang, word_index=i)
        out_words.append(result.output)
        if result.intermediates:
            intermediates.extend(result.intermediates)
        lengths.extend(result.decode_lengths)
        flags.extend(result.flags)

    two_stage = Language.ENGLISH not in (request.source_lang, request.target_lang)
    return TransliterationResult(
        " ".join(out_words),
        tuple(out_words),
        tuple(intermediates) if two_stage else None,
        tuple(lengths),
        tuple(flags),
    )

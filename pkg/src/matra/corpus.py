"""Corpus ingestion: XML parsing, cleaning, tagging, vocabulary and encoding.

The bilingual corpora arrive as UTF-8 XML with a `TransliterationCorpus`
root whose `Name` children each hold one `SourceName` and one or more
`TargetName` elements. Every (source, target) pair becomes a triple tagged
with the OUTPUT language's special token; reversing an English-paired set
yields the opposite direction, and merging both gives the bi-directional
training corpus.
"""
from __future__ import annotations

import json
import unicodedata
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .languages import Language

PAD, EOS, UNK = "<PAD>", "<EOS>", "<UNK>"

# Reserved ids are fixed so checkpoints stay portable across corpora with
# equal character sets.
RESERVED_TOKENS = (
    PAD,
    EOS,
    UNK,
    Language.ENGLISH.token,
    Language.HINDI.token,
    Language.BENGALI.token,
    Language.TAMIL.token,
    Language.KANNADA.token,
)

PAD_ID, EOS_ID, UNK_ID = 0, 1, 2


class CorpusError(Exception):
    """Bad corpus input (malformed XML, impossible direction, bad ratios)."""


@dataclass(frozen=True)
class Triple:
    """One transliteration example: source word, target word, direction."""

    source: str
    target: str
    source_lang: Language
    target_lang: Language

    def reversed(self) -> "Triple":
        return Triple(self.target, self.source, self.target_lang, self.source_lang)


@dataclass
class Corpus:
    triples: list[Triple]
    provenance: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)


@dataclass
class Rejection:
    source: str
    target: str
    rule: str
    detail: str

    def to_json(self) -> str:
        return json.dumps(
            {"source": self.source, "target": self.target, "rule": self.rule, "detail": self.detail},
            ensure_ascii=False,
        )


@dataclass
class ParseResult:
    triples: list[Triple]
    ignored_elements: int = 0


def parse_news_xml(
    xml_bytes: bytes,
    source_lang: Language,
    target_lang: Language,
    strict: bool = False,
) -> ParseResult:
    """Extract raw (uncleaned) triples from one corpus XML file.

    A `Name` element with k `TargetName` children yields k triples, the
    source word repeated. Unknown elements are counted and skipped, or
    rejected outright in strict mode.
    """
    try:
        root = ET.fromstring(xml_bytes.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise CorpusError(f"corpus file is not UTF-8: {exc}") from exc
    except ET.ParseError as exc:
        line, col = exc.position
        raise CorpusError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    ignored = 0
    if root.tag != "TransliterationCorpus":
        if strict:
            raise CorpusError(f"unexpected root element <{root.tag}>, wanted <TransliterationCorpus>")
        ignored += 1

    triples: list[Triple] = []
    for name_el in root:
        if name_el.tag != "Name":
            if strict:
                raise CorpusError(f"unexpected element <{name_el.tag}> under corpus root")
            ignored += 1
            continue
        source = None
        targets: list[str] = []
        for child in name_el:
            if child.tag == "SourceName":
                source = (child.text or "").strip()
            elif child.tag == "TargetName":
                targets.append((child.text or "").strip())
            else:
                if strict:
                    raise CorpusError(f"unexpected element <{child.tag}> under <Name>")
                ignored += 1
        if source is None or not targets:
            if strict:
                raise CorpusError("<Name> element missing SourceName or TargetName")
            ignored += 1
            continue
        for target in targets:
            triples.append(Triple(source, target, source_lang, target_lang))
    return ParseResult(triples, ignored)


def _normalize(word: str, lang: Language) -> str:
    word = unicodedata.normalize("NFC", word)
    if lang is Language.ENGLISH:
        word = word.upper()
    return word


def _strip_foreign(word: str, lang: Language) -> tuple[str, str]:
    """Return (kept characters, stripped characters)."""
    kept, stripped = [], []
    for ch in word:
        (kept if lang.in_script(ch) else stripped).append(ch)
    return "".join(kept), "".join(stripped)


def clean_pairs(triples: Iterable[Triple]) -> tuple[list[Triple], list[Rejection]]:
    """Apply the cleaning rules; return kept triples plus a rejection report.

    Rules, in order: source/target whitespace-token counts must agree and
    be exactly one; characters outside the side's script are stripped when
    both sides stay non-empty, otherwise the triple is dropped; exact
    duplicates are dropped. Character strips that keep the triple are also
    logged, so the report explains every byte-level change.
    """
    kept: list[Triple] = []
    report: list[Rejection] = []
    seen: set[tuple[str, str, Language]] = set()

    for t in triples:
        source = _normalize(t.source, t.source_lang)
        target = _normalize(t.target, t.target_lang)

        n_src, n_tgt = len(source.split()), len(target.split())
        if n_src != n_tgt:
            report.append(Rejection(source, target, "word-count", f"source has {n_src} words, target has {n_tgt}"))
            continue
        if n_src != 1:
            report.append(Rejection(source, target, "multi-word", f"{n_src} words on both sides; single words only"))
            continue

        src_kept, src_stripped = _strip_foreign(source, t.source_lang)
        tgt_kept, tgt_stripped = _strip_foreign(target, t.target_lang)
        if not src_kept or not tgt_kept:
            report.append(
                Rejection(source, target, "script-empty", "nothing left after removing out-of-script characters")
            )
            continue
        if src_stripped or tgt_stripped:
            report.append(
                Rejection(source, target, "char-strip", f"stripped {src_stripped + tgt_stripped!r}; pair kept")
            )

        key = (src_kept, tgt_kept, t.target_lang)
        if key in seen:
            report.append(Rejection(src_kept, tgt_kept, "duplicate", "exact duplicate of an earlier pair"))
            continue
        seen.add(key)
        kept.append(Triple(src_kept, tgt_kept, t.source_lang, t.target_lang))

    return kept, report


def tag_and_merge(direction_datasets: Iterable[Sequence[Triple]], provenance: Iterable[str] = ()) -> Corpus:
    """Merge cleaned per-direction triple sets into one tagged corpus.

    Every direction must have English on one side; there is no training
    data for direct Indic-to-Indic pairs. Duplicates across sets collapse.
    """
    merged: list[Triple] = []
    seen: set[tuple[str, str, Language]] = set()
    for dataset in direction_datasets:
        for t in dataset:
            if t.source_lang is not Language.ENGLISH and t.target_lang is not Language.ENGLISH:
                raise CorpusError(
                    f"direction {t.source_lang.value}->{t.target_lang.value} has no English side; "
                    "no such training data exists"
                )
            key = (t.source, t.target, t.target_lang)
            if key in seen:
                continue
            seen.add(key)
            merged.append(t)
    return Corpus(merged, list(provenance))


@dataclass(frozen=True)
class Vocabulary:
    """Bijective token <-> id map: 8 reserved tokens plus single characters."""

    id_to_token: tuple[str, ...]

    def __post_init__(self):
        if tuple(self.id_to_token[: len(RESERVED_TOKENS)]) != RESERVED_TOKENS:
            raise ValueError("vocabulary must start with the reserved tokens in fixed order")
        if len(set(self.id_to_token)) != len(self.id_to_token):
            raise ValueError("vocabulary tokens must be unique")
        object.__setattr__(self, "_token_to_id", {tok: i for i, tok in enumerate(self.id_to_token)})

    def __len__(self) -> int:
        return len(self.id_to_token)

    def id_of(self, token: str) -> int:
        return self._token_to_id[token]

    def id_or_unk(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def decode(self, ids: Sequence[int]) -> str:
        return "".join(self.id_to_token[i] for i in ids)


def build_vocab(corpus: Corpus) -> Vocabulary:
    """Reserved tokens plus every distinct corpus character, in code-point order."""
    if not corpus.triples:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    chars: set[str] = set()
    for t in corpus:
        chars.update(t.source)
        chars.update(t.target)
    return Vocabulary(RESERVED_TOKENS + tuple(sorted(chars)))


def split_corpus(
    corpus: Corpus,
    seed: int = 42,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic train/dev/test split, grouped by (source word, direction).

    Grouping keeps all alternative outputs of the same input word in one
    partition, so a word with several targets can never leak between train
    and test.
    """
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"split ratios must be non-negative and sum to 1, got {ratios}")

    groups: dict[tuple[str, Language, Language], list[Triple]] = {}
    for t in corpus:
        groups.setdefault((t.source, t.source_lang, t.target_lang), []).append(t)

    keys = sorted(groups, key=lambda k: (k[0], k[1].value, k[2].value))
    rng = np.random.default_rng(seed)
    rng.shuffle(keys)

    total = len(corpus)
    bounds = (ratios[0] * total, (ratios[0] + ratios[1]) * total)
    parts: tuple[list[Triple], list[Triple], list[Triple]] = ([], [], [])
    placed = 0
    for key in keys:
        group = groups[key]
        if placed + len(group) <= bounds[0] + 1e-9:
            parts[0].extend(group)
        elif placed + len(group) <= bounds[1] + 1e-9:
            parts[1].extend(group)
        else:
            parts[2].extend(group)
        placed += len(group)

    return tuple(Corpus(p, list(corpus.provenance)) for p in parts)  # type: ignore[return-value]


@dataclass(frozen=True)
class EncodedExample:
    """Token-id views of one triple; both sequences open with the target
    language token and close with `<EOS>`."""

    src_ids: tuple[int, ...]
    tgt_ids: tuple[int, ...]


class SequenceTooLongError(CorpusError):
    def __init__(self, triple: Triple, length: int, max_seq_len: int):
        super().__init__(
            f"pair ({triple.source!r}, {triple.target!r}) encodes to {length} tokens, "
            f"over the limit of {max_seq_len}"
        )
        self.triple = triple
        self.length = length
        self.max_seq_len = max_seq_len


def encode_example(triple: Triple, vocab: Vocabulary, max_seq_len: int) -> tuple[EncodedExample, int]:
    """Encode one triple; returns the example and how many `<UNK>`s were used."""
    lang_id = vocab.id_of(triple.target_lang.token)
    unk_count = 0

    def ids_for(word: str) -> tuple[int, ...]:
        nonlocal unk_count
        out = [lang_id]
        for ch in word:
            i = vocab.id_or_unk(ch)
            if i == UNK_ID and ch not in vocab:
                unk_count += 1
            out.append(i)
        out.append(EOS_ID)
        return tuple(out)

    if not triple.source or not triple.target:
        raise CorpusError(f"cannot encode empty word in pair ({triple.source!r}, {triple.target!r})")
    src_ids, tgt_ids = ids_for(triple.source), ids_for(triple.target)
    longest = max(len(src_ids), len(tgt_ids))
    if longest > max_seq_len:
        raise SequenceTooLongError(triple, longest, max_seq_len)
    return EncodedExample(src_ids, tgt_ids), unk_count


@dataclass
class EncodeReport:
    unk_count: int = 0
    rejected: list[Rejection] = field(default_factory=list)


def encode_corpus(
    corpus: Corpus, vocab: Vocabulary, max_seq_len: int
) -> tuple[list[EncodedExample], EncodeReport]:
    """Encode a whole corpus, dropping over-length pairs into the report."""
    examples: list[EncodedExample] = []
    report = EncodeReport()
    for t in corpus:
        try:
            ex, unks = encode_example(t, vocab, max_seq_len)
        except SequenceTooLongError as exc:
            report.rejected.append(Rejection(t.source, t.target, "over-length", str(exc)))
            continue
        report.unk_count += unks
        examples.append(ex)
    return examples, report


# --- file formats -----------------------------------------------------------

def write_corpus_tsv(corpus: Corpus, path: str | Path) -> None:
    """One triple per line: source, target, target token, source token."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in corpus:
            fh.write(f"{t.source}\t{t.target}\t{t.target_lang.token}\t{t.source_lang.token}\n")


def read_corpus_tsv(path: str | Path) -> Corpus:
    triples: list[Triple] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise CorpusError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
            source, target, tgt_tok, src_tok = cols
            triples.append(
                Triple(source, target, Language.from_token(src_tok), Language.from_token(tgt_tok))
            )
    return Corpus(triples, [str(path)])


def write_rejection_report(rejections: Iterable[Rejection], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rejections:
            fh.write(r.to_json() + "\n")

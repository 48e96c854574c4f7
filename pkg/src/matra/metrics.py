"""Evaluation metrics: exact-match accuracy, CER, character BLEU and the
human-annotation pathway.

All string metrics operate on Unicode code points (inputs are NFC at
ingestion). The edit-operation split of a minimal alignment is not unique,
so the backtrace breaks ties in a fixed order (correct, substitution,
deletion, insertion) to keep the decomposition deterministic; the distance
itself is the plain unit-cost minimum.
"""
from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .languages import Language


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class EditOps:
    """Counts of the minimal alignment turning a prediction into the truth."""

    substitutions: int
    deletions: int
    insertions: int
    correct: int
    truth_len: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def edit_ops(prediction: str, truth: str) -> EditOps:
    """Minimal unit-cost edit alignment of `prediction` onto `truth`."""
    np_, nt = len(prediction), len(truth)
    dp = [[0] * (nt + 1) for _ in range(np_ + 1)]
    for i in range(np_ + 1):
        dp[i][0] = i
    for j in range(nt + 1):
        dp[0][j] = j
    for i in range(1, np_ + 1):
        row, prev = dp[i], dp[i - 1]
        for j in range(1, nt + 1):
            same = prediction[i - 1] == truth[j - 1]
            row[j] = min(prev[j - 1] + (0 if same else 1), prev[j] + 1, row[j - 1] + 1)

    subs = dels = ins = corr = 0
    i, j = np_, nt
    while i > 0 or j > 0:
        if i > 0 and j > 0 and prediction[i - 1] == truth[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            corr += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditOps(subs, dels, ins, corr, nt)


def cer(ops: EditOps) -> tuple[float, float]:
    """(vanilla, normalized) character error rate from an alignment.

    Vanilla divides by the truth length and can exceed 1 when many
    deletions are needed; the normalized form divides by all operations
    plus correct characters and stays within [0, 1].
    """
    if ops.truth_len < 1:
        raise MetricError("vanilla CER undefined for empty ground truth")
    denom = ops.distance + ops.correct
    if denom < 1:
        raise MetricError("normalized CER undefined when there are no characters at all")
    return ops.distance / ops.truth_len, ops.distance / denom


def top1_accuracy(predictions: Sequence[str], references: Sequence[str]) -> float:
    if len(predictions) != len(references):
        raise MetricError(f"got {len(predictions)} predictions for {len(references)} references")
    if not references:
        raise MetricError("empty evaluation set")
    return sum(p == r for p, r in zip(predictions, references)) / len(references)


@dataclass(frozen=True)
class BleuReport:
    precisions: tuple[float, ...]
    brevity_penalty: float
    individual: tuple[float, ...]
    cumulative: tuple[float, ...]


def _ngram_counts(chars: str, n: int) -> Counter:
    return Counter(chars[i : i + n] for i in range(len(chars) - n + 1))


def char_bleu(prediction: str, reference: str, max_n: int = 4) -> BleuReport:
    """Character-level BLEU with clipped n-gram precision.

    No smoothing: a zero precision zeroes every cumulative score from that
    order up. An empty prediction scores zero everywhere (brevity penalty
    zero by convention); precisions of orders longer than the prediction
    count as zero.
    """
    if not reference:
        raise MetricError("BLEU reference must be non-empty")
    precisions = []
    for n in range(1, max_n + 1):
        pred_counts = _ngram_counts(prediction, n)
        total = sum(pred_counts.values())
        if total == 0:
            precisions.append(0.0)
            continue
        ref_counts = _ngram_counts(reference, n)
        clipped = sum(min(c, ref_counts[g]) for g, c in pred_counts.items())
        precisions.append(clipped / total)

    if not prediction:
        bp = 0.0
    elif len(prediction) >= len(reference):
        bp = 1.0
    else:
        bp = math.exp(1.0 - len(reference) / len(prediction))

    individual = tuple(bp * p for p in precisions)
    cumulative = []
    product = 1.0
    for n, p in enumerate(precisions, start=1):
        product *= p
        cumulative.append(bp * product ** (1.0 / n))
    return BleuReport(tuple(precisions), bp, individual, tuple(cumulative))


# --- human annotation pathway -----------------------------------------------

class Verdict(str, enum.Enum):
    CORRECT = "correct"
    INCORRECT = "incorrect"


@dataclass(frozen=True)
class AnnotationRecord:
    """One human judgement of a model prediction; `reference` carries the
    corrected word whenever the verdict is incorrect."""

    id: str
    source_lang: Language
    target_lang: Language
    input: str
    prediction: str
    verdict: Verdict
    reference: str | None = None
    annotator: str | None = None

    def __post_init__(self):
        if self.verdict is Verdict.INCORRECT and not self.reference:
            raise MetricError(f"annotation {self.id!r}: incorrect verdict requires a corrected reference")

    def effective_reference(self) -> str:
        return self.prediction if self.verdict is Verdict.CORRECT else self.reference  # type: ignore[return-value]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_lang": self.source_lang.value,
            "target_lang": self.target_lang.value,
            "input": self.input,
            "prediction": self.prediction,
            "verdict": self.verdict.value,
            "reference": self.reference,
            "annotator": self.annotator,
        }


def annotation_from_dict(raw: Mapping) -> AnnotationRecord:
    try:
        return AnnotationRecord(
            id=str(raw["id"]),
            source_lang=Language.from_name(raw["source_lang"]),
            target_lang=Language.from_name(raw["target_lang"]),
            input=raw["input"],
            prediction=raw["prediction"],
            verdict=Verdict(raw["verdict"]),
            reference=raw.get("reference"),
            annotator=raw.get("annotator"),
        )
    except KeyError as exc:
        raise MetricError(f"annotation record {raw.get('id', '?')!r} is missing field {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, MetricError):
            raise
        raise MetricError(f"annotation record {raw.get('id', '?')!r}: {exc}") from exc


def read_annotations(path: str | Path) -> list[AnnotationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(annotation_from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise MetricError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return records


def write_annotations(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class AnnotationSummary:
    correct_sounding_count: int
    total_count: int

    @property
    def phonetic_accuracy(self) -> float:
        return self.correct_sounding_count / self.total_count


def phonetic_accuracy(records: Sequence[AnnotationRecord]) -> AnnotationSummary:
    """Fraction of predictions judged correct-sounding by the annotators."""
    if not records:
        raise MetricError("no annotation records")
    correct = sum(r.verdict is Verdict.CORRECT for r in records)
    return AnnotationSummary(correct, len(records))


# Matrix layout mirrors the reporting convention: outer key is the source
# language (row), inner key the target language (column).
PairwiseMatrix = dict[str, dict[str, float]]


def _matrix_insert(matrix: PairwiseMatrix, source: Language, target: Language, value: float) -> None:
    matrix.setdefault(source.value, {})[target.value] = value


def reference_metrics(records: Sequence[AnnotationRecord]) -> dict[str, PairwiseMatrix]:
    """Mean normalized CER and mean cumulative BLEU-1..4 per language pair.

    Correct records use the model prediction itself as reference, so an
    all-correct pair has CER 0 and BLEU 1.
    """
    if not records:
        raise MetricError("no annotation records")
    by_pair: dict[tuple[Language, Language], list[AnnotationRecord]] = {}
    for r in records:
        by_pair.setdefault((r.source_lang, r.target_lang), []).append(r)

    report: dict[str, PairwiseMatrix] = {"cer": {}}
    for n in range(1, 5):
        report[f"bleu{n}"] = {}
    for (source, target), pair_records in sorted(by_pair.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        cers, bleus = [], []
        for r in pair_records:
            reference = r.effective_reference()
            if not reference:
                raise MetricError(f"annotation {r.id!r}: empty reference")
            cers.append(cer(edit_ops(r.prediction, reference))[1])
            bleus.append(char_bleu(r.prediction, reference).cumulative)
        _matrix_insert(report["cer"], source, target, sum(cers) / len(cers))
        for n in range(1, 5):
            _matrix_insert(report[f"bleu{n}"], source, target, sum(b[n - 1] for b in bleus) / len(bleus))
    return report


def annotation_report(records: Sequence[AnnotationRecord]) -> dict[str, PairwiseMatrix]:
    """Phonetic accuracy per pair plus the reference-based CER/BLEU matrices."""
    report = reference_metrics(records)
    phonetic: PairwiseMatrix = {}
    by_pair: dict[tuple[Language, Language], list[AnnotationRecord]] = {}
    for r in records:
        by_pair.setdefault((r.source_lang, r.target_lang), []).append(r)
    for (source, target), pair_records in by_pair.items():
        _matrix_insert(phonetic, source, target, phonetic_accuracy(pair_records).phonetic_accuracy)
    return {"phonetic_accuracy": phonetic, **report}


def evaluation_report(
    rows: Sequence[tuple[Language, Language, str, str]],
) -> dict[str, PairwiseMatrix]:
    """Per-pair top-1, mean normalized CER and cumulative BLEU for
    (source_lang, target_lang, prediction, reference) rows."""
    if not rows:
        raise MetricError("empty evaluation set")
    by_pair: dict[tuple[Language, Language], list[tuple[str, str]]] = {}
    for source, target, prediction, reference in rows:
        by_pair.setdefault((source, target), []).append((prediction, reference))

    report: dict[str, PairwiseMatrix] = {"top1": {}, "cer": {}}
    for n in range(1, 5):
        report[f"bleu{n}"] = {}
    for (source, target), pairs in sorted(by_pair.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        preds = [p for p, _ in pairs]
        refs = [r for _, r in pairs]
        _matrix_insert(report["top1"], source, target, top1_accuracy(preds, refs))
        cers = [cer(edit_ops(p, r))[1] for p, r in pairs]
        _matrix_insert(report["cer"], source, target, sum(cers) / len(cers))
        for n in range(1, 5):
            scores = [char_bleu(p, r).cumulative[n - 1] for p, r in pairs]
            _matrix_insert(report[f"bleu{n}"], source, target, sum(scores) / len(scores))
    return report

import os
from pathlib import Path

import numpy as np
import pytest

from matra.corpus import (
    Corpus,
    CorpusError,
    EOS_ID,
    PAD_ID,
    RESERVED_TOKENS,
    SequenceTooLongError,
    Triple,
    UNK_ID,
    Vocabulary,
    build_vocab,
    clean_pairs,
    encode_corpus,
    encode_example,
    parse_news_xml,
    read_corpus_tsv,
    split_corpus,
    tag_and_merge,
    write_corpus_tsv,
)
from matra.languages import Language

EN, HI, BN = Language.ENGLISH, Language.HINDI, Language.BENGALI

FIXTURE_XML = b"""<?xml version="1.0" encoding="UTF-8"?>
<TransliterationCorpus>
  <Name><SourceName>LEAGUE</SourceName><TargetName>\xe0\xa4\xb2\xe0\xa5\x80\xe0\xa4\x97</TargetName></Name>
  <Name>
    <SourceName>QIN</SourceName>
    <TargetName>\xe0\xa4\x95\xe0\xa4\xbf\xe0\xa4\xa8</TargetName>
    <TargetName>\xe0\xa4\x95\xe0\xa5\x80\xe0\xa4\xa8</TargetName>
  </Name>
</TransliterationCorpus>
"""


class TestParseNewsXml:
    def test_empty_corpus_element(self):
        result = parse_news_xml(b"<TransliterationCorpus></TransliterationCorpus>", EN, HI)
        assert result.triples == []

    def test_multi_target_expands_to_one_triple_each(self):
        # 2 Name entries, the second with 2 TargetName children -> 3 triples.
        result = parse_news_xml(FIXTURE_XML, EN, HI)
        assert result.triples == [
            Triple("LEAGUE", "लीग", EN, HI),
            Triple("QIN", "किन", EN, HI),
            Triple("QIN", "कीन", EN, HI),
        ]
        assert result.ignored_elements == 0

    def test_malformed_xml_reports_line(self):
        with pytest.raises(CorpusError, match="line"):
            parse_news_xml(b"<TransliterationCorpus><Name>", EN, HI)

    def test_unknown_elements_counted_not_fatal(self):
        xml = (
            b"<TransliterationCorpus><Meta/><Name><SourceName>A</SourceName>"
            b"<TargetName>\xe0\xa4\x95</TargetName><Junk/></Name></TransliterationCorpus>"
        )
        result = parse_news_xml(xml, EN, HI)
        assert len(result.triples) == 1
        assert result.ignored_elements == 2

    def test_strict_mode_rejects_unknown_elements(self):
        xml = b"<TransliterationCorpus><Meta/></TransliterationCorpus>"
        with pytest.raises(CorpusError, match="Meta"):
            parse_news_xml(xml, EN, HI, strict=True)

    def test_not_utf8_rejected(self):
        with pytest.raises(CorpusError, match="UTF-8"):
            parse_news_xml("<TransliterationCorpus/>".encode("utf-16"), EN, HI)

    def test_parse_then_reverse_equals_reverse_then_parse(self):
        forward = parse_news_xml(FIXTURE_XML, EN, HI).triples
        # "reversing the file" = swapping the roles of the two columns
        reversed_first = {
            Triple(t.target, t.source, HI, EN) for t in parse_news_xml(FIXTURE_XML, EN, HI).triples
        }
        assert {t.reversed() for t in forward} == reversed_first


class TestCleanPairs:
    def test_clean_pair_kept_unchanged(self):
        kept, report = clean_pairs([Triple("QIN", "किन", EN, HI)])
        assert kept == [Triple("QIN", "किन", EN, HI)]
        assert report == []

    def test_word_count_mismatch_dropped(self):
        kept, report = clean_pairs([Triple("NEW YORK", "न्यूयॉर्क", EN, HI)])
        assert kept == []
        assert [r.rule for r in report] == ["word-count"]

    def test_equal_multiword_dropped(self):
        kept, report = clean_pairs([Triple("NEW YORK", "न्यू यॉर्क", EN, HI)])
        assert kept == []
        assert [r.rule for r in report] == ["multi-word"]

    def test_foreign_digit_stripped(self):
        kept, report = clean_pairs([Triple("LEAGUE", "ली2ग", EN, HI)])
        assert kept == [Triple("LEAGUE", "लीग", EN, HI)]
        assert [r.rule for r in report] == ["char-strip"]

    def test_all_foreign_word_dropped(self):
        kept, report = clean_pairs([Triple("123", "क", EN, HI)])
        assert kept == []
        assert [r.rule for r in report] == ["script-empty"]

    def test_latin_uppercased(self):
        kept, _ = clean_pairs([Triple("league", "लीग", EN, HI)])
        assert kept[0].source == "LEAGUE"

    def test_duplicates_dropped(self):
        t = Triple("QIN", "किन", EN, HI)
        kept, report = clean_pairs([t, t])
        assert len(kept) == 1
        assert [r.rule for r in report] == ["duplicate"]

    def test_hyphen_stripped_and_logged(self):
        kept, report = clean_pairs([Triple("CO-OP", "कओऑप", EN, HI)])
        assert kept[0].source == "COOP"
        assert report[0].rule == "char-strip"

    def test_cleaning_is_idempotent(self):
        raw = [
            Triple("league", "ली2ग", EN, HI),
            Triple("QIN", "किन", EN, HI),
            Triple("NEW YORK", "न्यू", EN, HI),
            Triple("QIN", "किन", EN, HI),
        ]
        once, _ = clean_pairs(raw)
        twice, report = clean_pairs(once)
        assert twice == once
        assert report == []


class TestTagAndMerge:
    def test_output_language_tagging(self):
        league = Triple("LEAGUE", "लीग", EN, HI)
        corpus = tag_and_merge([[league], [league.reversed()]])
        assert corpus.triples[0].target_lang is HI
        assert corpus.triples[1] == Triple("लीग", "LEAGUE", HI, EN)

    def test_empty_input(self):
        assert tag_and_merge([]).triples == []

    def test_non_english_direction_rejected(self):
        with pytest.raises(CorpusError, match="English"):
            tag_and_merge([[Triple("क", "ক", HI, BN)]])

    def test_script_matches_token_after_merge(self):
        league = Triple("LEAGUE", "लीग", EN, HI)
        corpus = tag_and_merge([[league], [league.reversed()]])
        for t in corpus:
            assert all(t.target_lang.in_script(c) for c in t.target)


class TestVocabulary:
    def test_hand_sorted_code_points(self):
        corpus = Corpus([Triple("AB", "कख", EN, HI)])
        vocab = build_vocab(corpus)
        assert vocab.id_to_token == RESERVED_TOKENS + ("A", "B", "क", "ख")
        assert [vocab.id_of(t) for t in ("A", "B", "क", "ख")] == [8, 9, 10, 11]

    def test_reserved_ids(self):
        vocab = build_vocab(Corpus([Triple("A", "क", EN, HI)]))
        assert vocab.id_of("<PAD>") == PAD_ID == 0
        assert vocab.id_of("<EOS>") == EOS_ID == 1
        assert vocab.id_of("<UNK>") == UNK_ID == 2
        assert vocab.id_of("<english>") == 3
        assert vocab.id_of("<kannada>") == 7

    def test_deterministic_across_equal_char_sets(self):
        a = build_vocab(Corpus([Triple("AB", "कख", EN, HI)]))
        b = build_vocab(Corpus([Triple("BA", "खक", EN, HI), Triple("AB", "कक", EN, HI)]))
        assert a.id_to_token == b.id_to_token

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusError):
            build_vocab(Corpus([]))

    def test_round_trip_bijection(self):
        vocab = build_vocab(Corpus([Triple("LEAGUE", "लीग", EN, HI)]))
        for word in ("LEAGUE", "लीग", "Gauge".upper()):
            ids = [vocab.id_of(c) for c in word]
            assert vocab.decode(ids) == word

    def test_reserved_prefix_enforced(self):
        with pytest.raises(ValueError):
            Vocabulary(("<EOS>", "<PAD>"))


class TestSplitCorpus:
    def _synthetic(self, n=100):
        # several triples share a source word, emulating multi-output entries
        triples = []
        for i in range(n):
            word = f"W{i % 40}"
            triples.append(Triple(word, "क" * (1 + i % 3), EN, HI))
        return Corpus(triples)

    def test_all_in_train(self):
        corpus = self._synthetic()
        train, dev, test = split_corpus(corpus, seed=1, ratios=(1.0, 0.0, 0.0))
        assert len(train) == len(corpus) and len(dev) == 0 and len(test) == 0

    def test_deterministic(self):
        corpus = self._synthetic()
        first = split_corpus(corpus, seed=9)
        second = split_corpus(corpus, seed=9)
        assert [p.triples for p in first] == [p.triples for p in second]

    def test_groups_never_straddle_partitions(self):
        corpus = self._synthetic()
        parts = split_corpus(corpus, seed=3, ratios=(0.8, 0.1, 0.1))
        # brute-force audit: every (source word, direction) group sits in one part
        for key in {(t.source, t.source_lang, t.target_lang) for t in corpus}:
            hits = [
                i
                for i, part in enumerate(parts)
                if any((t.source, t.source_lang, t.target_lang) == key for t in part)
            ]
            assert len(hits) == 1
        assert sum(len(p) for p in parts) == len(corpus)

    def test_bad_ratios_rejected(self):
        with pytest.raises(CorpusError, match="sum to 1"):
            split_corpus(self._synthetic(), ratios=(0.8, 0.1, 0.2))


class TestEncodeExample:
    # vocab over {LEAGUE, लीग}: chars sorted A,E,G,L,U,ग,ल,ी -> ids 8..15
    LEAGUE_VOCAB = Vocabulary(
        RESERVED_TOKENS + ("A", "E", "G", "L", "U", "ग", "ल", "ी")
    )

    def test_league_example_ids(self):
        triple = Triple("LEAGUE", "लीग", EN, HI)
        ex, unks = encode_example(triple, self.LEAGUE_VOCAB, max_seq_len=50)
        hindi = self.LEAGUE_VOCAB.id_of("<hindi>")
        assert ex.src_ids == (hindi, 11, 9, 8, 10, 12, 9, EOS_ID)
        assert ex.tgt_ids == (hindi, 14, 15, 13, EOS_ID)
        assert unks == 0

    def test_language_token_leads_both_sequences(self):
        triple = Triple("लीग", "LEAGUE", HI, EN)
        ex, _ = encode_example(triple, self.LEAGUE_VOCAB, max_seq_len=50)
        english = self.LEAGUE_VOCAB.id_of("<english>")
        assert ex.src_ids[0] == ex.tgt_ids[0] == english
        assert ex.src_ids[-1] == ex.tgt_ids[-1] == EOS_ID

    def test_over_length_rejected(self):
        triple = Triple("A" * 60, "ग", EN, HI)
        with pytest.raises(SequenceTooLongError):
            encode_example(triple, self.LEAGUE_VOCAB, max_seq_len=50)

    def test_empty_target_rejected(self):
        with pytest.raises(CorpusError):
            encode_example(Triple("A", "", EN, HI), self.LEAGUE_VOCAB, 50)

    def test_unknown_characters_counted(self):
        ex, unks = encode_example(Triple("AXE", "ल", EN, HI), self.LEAGUE_VOCAB, 50)
        assert unks == 1
        assert UNK_ID in ex.src_ids

    def test_encode_corpus_reports_over_length(self):
        corpus = Corpus([Triple("A" * 60, "ग", EN, HI), Triple("A", "ग", EN, HI)])
        examples, report = encode_corpus(corpus, self.LEAGUE_VOCAB, max_seq_len=50)
        assert len(examples) == 1
        assert [r.rule for r in report.rejected] == ["over-length"]


@pytest.mark.skipif(
    "MATRA_NEWS_DIR" not in os.environ,
    reason="the real corpus is not bundled; set MATRA_NEWS_DIR to its XML directory",
)
def test_full_real_corpus_ingest_count():
    """Both-direction merge of the four English-paired datasets, cleaned."""
    from matra.cli import _languages_from_filename

    directions = []
    for path in sorted(Path(os.environ["MATRA_NEWS_DIR"]).glob("*.xml")):
        pair = _languages_from_filename(path)
        if pair is None:
            continue
        cleaned, _ = clean_pairs(parse_news_xml(path.read_bytes(), *pair).triples)
        directions.append(cleaned)
        directions.append([t.reversed() for t in cleaned])
    merged = tag_and_merge(directions)
    assert len(merged) == 113_474


class TestTsvFormat:
    def test_tagging_format_byte_exact(self, tmp_path):
        league = Triple("LEAGUE", "लीग", EN, HI)
        corpus = tag_and_merge([[league], [league.reversed()]])
        path = tmp_path / "corpus.tsv"
        write_corpus_tsv(corpus, path)
        expected = (
            "LEAGUE\tलीग\t<hindi>\t<english>\n"
            "लीग\tLEAGUE\t<english>\t<hindi>\n"
        ).encode("utf-8")
        assert path.read_bytes() == expected

    def test_round_trip(self, tmp_path):
        league = Triple("LEAGUE", "लीग", EN, HI)
        corpus = tag_and_merge([[league], [league.reversed()]])
        path = tmp_path / "corpus.tsv"
        write_corpus_tsv(corpus, path)
        assert read_corpus_tsv(path).triples == corpus.triples

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("one\ttwo\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="4 tab-separated"):
            read_corpus_tsv(path)

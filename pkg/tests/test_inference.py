import numpy as np
import pytest

from matra.corpus import EOS_ID, PAD_ID
from matra.inference import (
    InvalidRequestError,
    ScriptValidationError,
    TransliterationRequest,
    greedy_decode,
    greedy_decode_word,
    transliterate_text,
    transliterate_word,
)
from matra.languages import INDIC_LANGUAGES, Language

from conftest import rigged_checkpoint

EN, HI, BN, KN = Language.ENGLISH, Language.HINDI, Language.BENGALI, Language.KANNADA


class TestGreedyDecode:
    def test_immediate_eos_gives_empty_output(self, toy_setup):
        _, vocab, config = toy_setup
        ckpt = rigged_checkpoint(vocab, config, favored_id=EOS_ID)
        out = greedy_decode(ckpt, np.array([4, 8, 1]), HI)
        assert out == []

    def test_output_bounded_by_max_len(self, toy_setup):
        _, vocab, config = toy_setup
        ckpt = rigged_checkpoint(vocab, config, favored_id=9)  # a letter, never EOS
        out = greedy_decode(ckpt, np.array([4, 8, 1]), HI)
        assert len(out) == config.max_seq_len - 1
        assert set(out) == {9}

    def test_ties_resolve_to_lowest_id(self, toy_setup):
        _, vocab, config = toy_setup
        ckpt = rigged_checkpoint(vocab, config, favored_id=None)  # all logits equal
        out = greedy_decode(ckpt, np.array([4, 8, 1]), HI, max_len=4)
        assert set(out) == {PAD_ID}

    def test_memorized_pair_decodes_to_training_target(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        for triple in corpus.triples[:8]:
            assert greedy_decode_word(ckpt, triple.source, triple.target_lang) == triple.target


class TestTransliterateWord:
    def test_single_stage_has_no_intermediate(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        t = next(t for t in corpus if t.source_lang is EN)
        result = transliterate_word(ckpt, t.source, EN, t.target_lang)
        assert result.intermediates is None
        assert result.output == t.target

    def test_two_stage_records_intermediate(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        t = next(t for t in corpus if t.source_lang is HI)
        result = transliterate_word(ckpt, t.source, HI, KN)
        assert result.intermediates is not None and len(result.intermediates) == 1
        assert all(KN.in_script(c) for c in result.output)

    def test_chaining_equals_explicit_composition(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        for t in [t for t in corpus if t.source_lang is HI][:4]:
            direct = transliterate_word(ckpt, t.source, HI, BN)
            stage1 = transliterate_word(ckpt, t.source, HI, EN)
            stage2 = transliterate_word(ckpt, stage1.output, EN, BN)
            assert direct.output == stage2.output
            assert direct.intermediates == (stage1.output,)

    def test_same_language_rejected(self, toy_setup, memorized):
        ckpt, _ = memorized
        with pytest.raises(InvalidRequestError):
            transliterate_word(ckpt, "KT", EN, EN)

    def test_script_violation_names_character(self, toy_setup, memorized):
        ckpt, _ = memorized
        with pytest.raises(ScriptValidationError, match="'9'"):
            transliterate_word(ckpt, "K9T", EN, HI)

    def test_lower_case_latin_accepted(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        t = next(t for t in corpus if t.source_lang is EN)
        assert transliterate_word(ckpt, t.source.lower(), EN, t.target_lang).output == t.target

    def test_deterministic(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        t = corpus.triples[0]
        a = transliterate_word(ckpt, t.source, t.source_lang, t.target_lang)
        b = transliterate_word(ckpt, t.source, t.source_lang, t.target_lang)
        assert a == b


class TestTransliterateText:
    def test_word_count_preserved(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        words = [t.source for t in corpus if t.source_lang is EN][:4]
        request = TransliterationRequest(" ".join(words), EN, HI)
        result = transliterate_text(ckpt, request)
        assert len(result.words) == 4
        assert len(result.output.split()) == 4

    def test_single_word_equals_transliterate_word(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        t = next(t for t in corpus if t.source_lang is EN)
        via_text = transliterate_text(ckpt, TransliterationRequest(t.source, EN, t.target_lang))
        via_word = transliterate_word(ckpt, t.source, EN, t.target_lang)
        assert via_text.output == via_word.output

    def test_double_spaces_collapse(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        words = [t.source for t in corpus if t.source_lang is EN][:2]
        result = transliterate_text(ckpt, TransliterationRequest(f"{words[0]}   {words[1]}", EN, HI))
        assert "  " not in result.output
        assert len(result.words) == 2

    def test_error_carries_word_index(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        good = next(t for t in corpus if t.source_lang is EN).source
        with pytest.raises(ScriptValidationError, match="word 1"):
            transliterate_text(ckpt, TransliterationRequest(f"{good} X7X", EN, HI))

    def test_empty_text_rejected(self, toy_setup, memorized):
        ckpt, _ = memorized
        with pytest.raises(InvalidRequestError, match="empty"):
            transliterate_text(ckpt, TransliterationRequest("   ", EN, HI))

    def test_sentence_intermediates_one_per_word(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        words = [t.source for t in corpus if t.source_lang is HI][:3]
        result = transliterate_text(ckpt, TransliterationRequest(" ".join(words), HI, BN))
        assert result.intermediates is not None and len(result.intermediates) == 3


class TestOutputScriptPurity:
    def test_out_of_script_output_is_flagged_not_repaired(self, toy_setup):
        _, vocab, config = toy_setup
        # a model stuck on a Latin letter produces it even for Hindi targets
        latin_id = vocab.id_of("K")
        ckpt = rigged_checkpoint(vocab, config, favored_id=latin_id)
        result = transliterate_word(ckpt, "KT", EN, HI)
        assert "K" in result.output  # kept
        assert any("outside the hindi script" in f for f in result.flags)

    def test_memorized_model_outputs_stay_in_script(self, toy_setup, memorized):
        corpus, _, _ = toy_setup
        ckpt, _ = memorized
        langs = [EN, *INDIC_LANGUAGES]
        for t in corpus.triples[::7]:
            for lang in langs:
                if lang is t.source_lang:
                    continue
                result = transliterate_word(ckpt, t.source, t.source_lang, lang)
                assert result.output
                assert all(lang.in_script(c) for c in result.output), (t.source, lang, result)

"""Tiny deterministic corpus for memorization runs and demos.

Four letters per script, mapped one-to-one onto the Latin letters K, T, N
and R, give 64 bi-directional pairs across all five languages while the
whole vocabulary (reserved tokens included) stays at 24 entries. The
character mapping is consistent, so a model that memorizes it also has a
coherent pattern to steer by.
"""
from __future__ import annotations

import numpy as np

from .corpus import Corpus, Triple, build_vocab
from .languages import INDIC_LANGUAGES, Language
from .model import ModelConfig
from .training import TrainConfig, TrainMode

LATIN_LETTERS = "KTNR"

# K, T, N, R equivalents in each script block.
SCRIPT_LETTERS = {
    Language.HINDI: "कतनर",
    Language.BENGALI: "কতনর",
    Language.TAMIL: "கதநர",
    Language.KANNADA: "ಕತನರ",
}

WORDS_PER_PAIR = 8


def toy_corpus(seed: int = 7) -> Corpus:
    """64 triples: the same 8 English words rendered into every Indic
    script, in both directions. Sharing the words across pairs means the
    only signal separating the four English-source targets is the language
    token, which is the steering behaviour the model has to learn."""
    rng = np.random.default_rng(seed)
    words: set[str] = set()
    while len(words) < WORDS_PER_PAIR:
        length = int(rng.integers(2, 5))
        words.add("".join(rng.choice(list(LATIN_LETTERS), size=length)))
    triples: list[Triple] = []
    for lang in INDIC_LANGUAGES:
        mapping = dict(zip(LATIN_LETTERS, SCRIPT_LETTERS[lang]))
        for eng in sorted(words):
            indic = "".join(mapping[c] for c in eng)
            triples.append(Triple(eng, indic, Language.ENGLISH, lang))
            triples.append(Triple(indic, eng, lang, Language.ENGLISH))
    return Corpus(triples, ["toydata"])


def toy_model_config(vocab_size: int | None = None) -> ModelConfig:
    if vocab_size is None:
        vocab_size = len(build_vocab(toy_corpus()))
    return ModelConfig(
        num_encoder_layers=2,
        num_decoder_layers=2,
        embed_size=32,
        heads=4,
        hidden_dim=64,
        max_seq_len=16,
        dropout=0.0,
        vocab_size=vocab_size,
    )


def toy_train_config(epochs: int = 250, seed: int = 42) -> TrainConfig:
    """250 epochs of 2 batches each lands exactly on 500 optimizer steps."""
    return TrainConfig(
        batch_size=32,
        epochs=epochs,
        warmup_steps=50,
        peak_lr=3e-3,
        seed=seed,
        mode=TrainMode.BIDIRECTIONAL,
    )


def _main(argv=None) -> None:
    """Train the demo checkpoint: python3 -m matra.toydata out.ckpt"""
    import argparse
    import json
    from pathlib import Path

    from .training import save_checkpoint, train

    parser = argparse.ArgumentParser(description="train and save the toy demo checkpoint")
    parser.add_argument("out", help="checkpoint output path")
    parser.add_argument("--manifest", help="also write a JSON manifest of the corpus words")
    parser.add_argument("--epochs", type=int, default=250)
    args = parser.parse_args(argv)

    corpus = toy_corpus()
    ckpt, history = train(corpus, toy_model_config(), toy_train_config(args.epochs))
    save_checkpoint(ckpt, args.out)
    if args.manifest:
        words: dict[str, list[str]] = {}
        for t in corpus:
            words.setdefault(t.source_lang.value, []).append(t.source)
        manifest = {"words": {lang: sorted(set(ws)) for lang, ws in words.items()}}
        Path(args.manifest).write_text(json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"trained {ckpt.meta.steps} steps, final loss {history.epoch_mean_loss[-1]:.4f} -> {args.out}")


if __name__ == "__main__":
    _main()

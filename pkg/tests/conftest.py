import numpy as np
import pytest

from matra.corpus import build_vocab
from matra.model import init_model
from matra.toydata import toy_corpus, toy_model_config, toy_train_config
from matra.training import Checkpoint, CHECKPOINT_VERSION, TrainMeta, train


@pytest.fixture(scope="session")
def toy_setup():
    corpus = toy_corpus()
    vocab = build_vocab(corpus)
    return corpus, vocab, toy_model_config(len(vocab))


@pytest.fixture(scope="session")
def memorized(toy_setup):
    """One full memorization run shared across the suite (about a minute)."""
    corpus, vocab, config = toy_setup
    ckpt, history = train(corpus, config, toy_train_config(), vocab=vocab)
    return ckpt, history


def rigged_checkpoint(vocab, config, favored_id=None):
    """Zero-weight model whose constant logits favor one token (or tie at 0)."""
    params = init_model(config, seed=0)
    for name, t in params.tensors.items():
        data = np.zeros_like(t.data)
        if name == "out.b" and favored_id is not None:
            data[favored_id] = 10.0
        params.tensors[name] = type(t)(data, requires_grad=False)
    return Checkpoint(CHECKPOINT_VERSION, config, vocab, params, TrainMeta("bidirectional", 0, None))

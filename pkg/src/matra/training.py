"""Teacher-forced training with Adam, linear-warmup schedule and checkpoints.

The optimizer and the schedule are fully deterministic under the config
seed, so two runs on the same platform produce bit-identical checkpoints.
Checkpoints are self-contained: config, vocabulary and every tensor travel
in one file (magic "MATR", version, JSON header, raw little-endian float32
data in manifest order).
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .autodiff import Tensor
from .corpus import Corpus, CorpusError, EncodedExample, Vocabulary, build_vocab, encode_corpus
from .languages import Language
from .model import ModelConfig, ModelParams, forward_loss, init_model, parameter_shapes

CHECKPOINT_MAGIC = b"MATR"
CHECKPOINT_VERSION = 1

ADAM_BETA1, ADAM_BETA2, ADAM_EPS = 0.9, 0.999, 1e-8
GRAD_CLIP_NORM = 1.0


class TrainMode(str, enum.Enum):
    INDIC2ENG = "indic2eng"
    ENG2INDIC = "eng2indic"
    BIDIRECTIONAL = "bidirectional"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 16
    warmup_steps: int = 300
    peak_lr: float = 3e-4
    seed: int = 42
    mode: TrainMode = TrainMode.BIDIRECTIONAL

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.warmup_steps < 0:
            raise ValueError("batch_size must be >= 1, epochs and warmup_steps >= 0")
        if self.peak_lr <= 0:
            raise ValueError(f"peak_lr must be positive, got {self.peak_lr}")


@dataclass
class TrainHistory:
    epoch_mean_loss: list[float] = field(default_factory=list)
    dev_top1: list[float | None] = field(default_factory=list)

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for epoch, (loss, acc) in enumerate(zip(self.epoch_mean_loss, self.dev_top1), start=1):
                fh.write(json.dumps({"epoch": epoch, "mean_loss": loss, "dev_top1": acc}) + "\n")


def lr_multiplier(step: int, warmup_steps: int, total_steps: int) -> float:
    """Linear ramp to 1.0 at warmup_steps, then linear decay to 0 at total_steps."""
    if warmup_steps >= total_steps:
        raise ValueError(f"warmup_steps {warmup_steps} must be < total_steps {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if step <= warmup_steps:
        return step / warmup_steps if warmup_steps else 1.0
    return (total_steps - step) / (total_steps - warmup_steps)


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


class NonFiniteError(RuntimeError):
    pass


def optimizer_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update; returns fresh parameter tensors."""
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    state.step += 1
    t = state.step
    updated: dict[str, Tensor] = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            updated[name] = p
            continue
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for tensor {name!r}")
        g = g.astype(p.data.dtype, copy=False)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            state.m[name] = m
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m[...] = ADAM_BETA1 * m + (1 - ADAM_BETA1) * g
        v[...] = ADAM_BETA2 * v + (1 - ADAM_BETA2) * g * g
        m_hat = m / (1 - ADAM_BETA1**t)
        v_hat = v / (1 - ADAM_BETA2**t)
        new_data = p.data - p.data.dtype.type(lr) * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        updated[name] = Tensor(new_data.astype(p.data.dtype), requires_grad=True)
    return updated, state


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float = GRAD_CLIP_NORM) -> float:
    """Scale gradients in place to a global norm cap; returns the raw norm."""
    total = float(np.sqrt(sum(float((g**2).sum()) for g in grads.values())))
    if total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def filter_by_mode(corpus: Corpus, mode: TrainMode) -> Corpus:
    if mode is TrainMode.BIDIRECTIONAL:
        subset = list(corpus.triples)
    elif mode is TrainMode.INDIC2ENG:
        subset = [t for t in corpus if t.target_lang is Language.ENGLISH]
    else:
        subset = [t for t in corpus if t.source_lang is Language.ENGLISH]
    if not subset:
        raise CorpusError(f"no triples left after filtering for mode {mode.value!r}")
    return Corpus(subset, list(corpus.provenance))


@dataclass
class TrainMeta:
    mode: str
    steps: int
    final_loss: float | None


@dataclass
class Checkpoint:
    version: int
    config: ModelConfig
    vocab: Vocabulary
    params: ModelParams
    meta: TrainMeta


def train(
    corpus: Corpus,
    model_config: ModelConfig,
    train_config: TrainConfig,
    dev: Corpus | None = None,
    vocab: Vocabulary | None = None,
) -> tuple[Checkpoint, TrainHistory]:
    """Train on the mode-filtered corpus; returns checkpoint plus history.

    Batches are shuffled each epoch with the seeded RNG; the learning rate
    is peak_lr times the warmup/decay multiplier; gradients are clipped at
    global norm 1. Aborts if the loss ever goes non-finite.
    """
    subset = filter_by_mode(corpus, train_config.mode)
    vocab = vocab or build_vocab(subset)
    if len(vocab) != model_config.vocab_size:
        raise ValueError(f"vocabulary has {len(vocab)} tokens but config.vocab_size is {model_config.vocab_size}")
    examples, _ = encode_corpus(subset, vocab, model_config.max_seq_len)
    if not examples:
        raise CorpusError("no encodable examples (all pairs over max_seq_len?)")

    params = init_model(model_config, train_config.seed)
    state = AdamState()
    history = TrainHistory()

    batches_per_epoch = (len(examples) + train_config.batch_size - 1) // train_config.batch_size
    total_steps = train_config.epochs * batches_per_epoch
    if total_steps == 0:
        meta = TrainMeta(train_config.mode.value, 0, None)
        return Checkpoint(CHECKPOINT_VERSION, model_config, vocab, params, meta), history

    shuffle_rng = np.random.default_rng(train_config.seed + 1)
    dropout_rng = np.random.default_rng(train_config.seed + 2) if model_config.dropout > 0 else None
    step = 0
    for _ in range(train_config.epochs):
        order = shuffle_rng.permutation(len(examples))
        epoch_losses = []
        for start in range(0, len(examples), train_config.batch_size):
            batch = [examples[i] for i in order[start : start + train_config.batch_size]]
            step += 1
            loss = forward_loss(params, batch, dropout_rng=dropout_rng)
            if not np.isfinite(loss.data):
                raise NonFiniteError(f"loss became non-finite at step {step}")
            loss.backward()
            grads = {name: t.grad for name, t in params.tensors.items() if t.grad is not None}
            clip_gradients(grads)
            lr = train_config.peak_lr * lr_multiplier(step, train_config.warmup_steps, total_steps)
            params.tensors, state = optimizer_step(params.tensors, grads, state, lr)
            epoch_losses.append(float(loss.data))
        history.epoch_mean_loss.append(float(np.mean(epoch_losses)))
        history.dev_top1.append(_dev_accuracy(params, model_config, vocab, dev) if dev else None)

    meta = TrainMeta(train_config.mode.value, step, history.epoch_mean_loss[-1])
    return Checkpoint(CHECKPOINT_VERSION, model_config, vocab, params, meta), history


def _dev_accuracy(params: ModelParams, config: ModelConfig, vocab: Vocabulary, dev: Corpus) -> float:
    from .inference import greedy_decode_word  # late import: inference depends on Checkpoint
    from .metrics import top1_accuracy

    ckpt = Checkpoint(CHECKPOINT_VERSION, config, vocab, params, TrainMeta("", 0, None))
    predictions = [greedy_decode_word(ckpt, t.source, t.target_lang) for t in dev]
    return top1_accuracy(predictions, [t.target for t in dev])


# --- checkpoint file format -------------------------------------------------

class CheckpointError(Exception):
    pass


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Write magic, version, length-prefixed JSON header, then raw <f4 data."""
    manifest = [{"name": n, "shape": list(t.shape)} for n, t in ckpt.params.tensors.items()]
    header = {
        "model_config": {k: getattr(ckpt.config, k) for k in ModelConfig.__dataclass_fields__},
        "vocab": list(ckpt.vocab.id_to_token),
        "manifest": manifest,
        "meta": {"mode": ckpt.meta.mode, "steps": ckpt.meta.steps, "final_loss": ckpt.meta.final_loss},
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", ckpt.version))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for entry in manifest:
            fh.write(ckpt.params.tensors[entry["name"]].data.astype("<f4").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    blob = Path(path).read_bytes()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes; not a checkpoint file")
    if len(blob) < 12:
        raise CheckpointError(f"{path}: truncated before header")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    (header_len,) = struct.unpack_from("<I", blob, 8)
    header_end = 12 + header_len
    if len(blob) < header_end:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc

    try:
        config = ModelConfig(**header["model_config"])
        vocab = Vocabulary(tuple(header["vocab"]))
        meta = TrainMeta(**header["meta"])
        manifest = header["manifest"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: invalid header contents: {exc}") from exc
    if len(vocab) != config.vocab_size:
        raise CheckpointError(
            f"{path}: vocabulary of {len(vocab)} tokens does not match config.vocab_size {config.vocab_size}"
        )
    expected_shapes = parameter_shapes(config)
    if [e["name"] for e in manifest] != list(expected_shapes):
        raise CheckpointError(f"{path}: tensor manifest does not match the model configuration")

    tensors: dict[str, Tensor] = {}
    offset = header_end
    for entry in manifest:
        shape = tuple(entry["shape"])
        if shape != expected_shapes[entry["name"]]:
            raise CheckpointError(f"{path}: tensor {entry['name']!r} has shape {shape}, expected {expected_shapes[entry['name']]}")
        nbytes = 4 * int(np.prod(shape))
        chunk = blob[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"{path}: truncated tensor data at {entry['name']!r}")
        tensors[entry["name"]] = Tensor(np.frombuffer(chunk, dtype="<f4").reshape(shape))
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes after tensor data")
    params = ModelParams(config, tensors)
    return Checkpoint(version, config, vocab, params, meta)

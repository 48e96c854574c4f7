"""Transformer encoder-decoder with learned positional embeddings.

Both the encoder input and the decoder seed begin with the TARGET
language's token, which is what steers a single set of weights toward any
of the five output scripts. Residual blocks are post-norm, attention is
scaled by 1/sqrt(head_dim), and the decoder's self-attention is masked so
position i sees only positions <= i.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .corpus import EncodedExample, PAD_ID


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    num_encoder_layers: int
    num_decoder_layers: int
    embed_size: int
    heads: int
    hidden_dim: int
    max_seq_len: int
    dropout: float
    vocab_size: int

    def __post_init__(self):
        if self.embed_size % self.heads != 0:
            raise ModelError(f"embed_size {self.embed_size} not divisible by heads {self.heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.max_seq_len < 2:
            raise ModelError(f"max_seq_len must be >= 2, got {self.max_seq_len}")
        for name in ("num_encoder_layers", "num_decoder_layers", "embed_size", "heads", "hidden_dim", "vocab_size"):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be positive")

    @classmethod
    def full_scale(cls, vocab_size: int) -> "ModelConfig":
        """The full-scale configuration the system ships with."""
        return cls(
            num_encoder_layers=12,
            num_decoder_layers=12,
            embed_size=768,
            heads=12,
            hidden_dim=3072,
            max_seq_len=50,
            dropout=0.0,
            vocab_size=vocab_size,
        )

    @property
    def head_dim(self) -> int:
        return self.embed_size // self.heads


@dataclass
class ModelParams:
    """All learned tensors, keyed by stable dotted names (checkpoint order)."""

    config: ModelConfig
    tensors: dict[str, Tensor]

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def trainable(self) -> dict[str, Tensor]:
        return self.tensors


def _attention_names(prefix: str) -> list[str]:
    return [f"{prefix}.{w}" for w in ("wq", "wk", "wv", "wo", "bq", "bk", "bv", "bo")]


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, h, v, L = config.embed_size, config.hidden_dim, config.vocab_size, config.max_seq_len
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (v, d),
        "pos_emb": (L, d),
    }

    def add_block(prefix: str, sublayers: Sequence[str]) -> None:
        for norm_idx, sub in enumerate(sublayers, start=1):
            if sub == "ff":
                shapes[f"{prefix}.ff.w1"] = (d, h)
                shapes[f"{prefix}.ff.b1"] = (h,)
                shapes[f"{prefix}.ff.w2"] = (h, d)
                shapes[f"{prefix}.ff.b2"] = (d,)
            else:
                for name in _attention_names(f"{prefix}.{sub}"):
                    shapes[name] = (d, d) if name.rsplit(".", 1)[1].startswith("w") else (d,)
            shapes[f"{prefix}.norm{norm_idx}.gain"] = (d,)
            shapes[f"{prefix}.norm{norm_idx}.bias"] = (d,)

    for i in range(config.num_encoder_layers):
        add_block(f"enc{i}", ("attn", "ff"))
    for i in range(config.num_decoder_layers):
        add_block(f"dec{i}", ("self", "cross", "ff"))
    shapes["out.w"] = (d, v)
    shapes["out.b"] = (v,)
    return shapes


def init_model(config: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """Seeded init: embeddings at std embed_size^-1/2, projections fan-in
    scaled, biases zero, layer-norm gain one."""
    rng = np.random.default_rng(seed)
    d = config.embed_size
    tensors: dict[str, Tensor] = {}
    for name, shape in parameter_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if name in ("tok_emb", "pos_emb"):
            data = rng.normal(0.0, d**-0.5, size=shape)
        elif leaf.startswith("w"):
            fan_in = shape[0]
            data = rng.normal(0.0, fan_in**-0.5, size=shape)
        elif leaf == "gain":
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        tensors[name] = Tensor(data.astype(dtype), requires_grad=True)
    return ModelParams(config, tensors)


def _linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return ad.add(ad.matmul(x, w), b)


def _dropout(x: Tensor, drop: tuple[float, np.random.Generator] | None) -> Tensor:
    if drop is None or drop[0] == 0.0:
        return x
    p, rng = drop
    keep = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return ad.mul(x, Tensor(keep))


def _multi_head_attention(
    params: ModelParams,
    prefix: str,
    x_q: Tensor,
    x_kv: Tensor,
    mask: np.ndarray | None,
) -> Tensor:
    p = params.tensors
    cfg = params.config
    t_q, t_k = x_q.shape[0], x_kv.shape[0]
    q = _linear(x_q, p[f"{prefix}.wq"], p[f"{prefix}.bq"])
    k = _linear(x_kv, p[f"{prefix}.wk"], p[f"{prefix}.bk"])
    v = _linear(x_kv, p[f"{prefix}.wv"], p[f"{prefix}.bv"])
    # [t, d] -> [heads, t, head_dim]
    q = ad.transpose(ad.reshape(q, (t_q, cfg.heads, cfg.head_dim)), (1, 0, 2))
    k = ad.transpose(ad.reshape(k, (t_k, cfg.heads, cfg.head_dim)), (1, 0, 2))
    v = ad.transpose(ad.reshape(v, (t_k, cfg.heads, cfg.head_dim)), (1, 0, 2))
    scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 2, 1))), cfg.head_dim**-0.5)
    if mask is not None:
        scores = ad.masked_fill(scores, mask, ad.MASK_VALUE)
    ctx = ad.matmul(ad.softmax(scores), v)
    merged = ad.reshape(ad.transpose(ctx, (1, 0, 2)), (t_q, cfg.embed_size))
    return _linear(merged, p[f"{prefix}.wo"], p[f"{prefix}.bo"])


def _feed_forward(params: ModelParams, prefix: str, x: Tensor) -> Tensor:
    p = params.tensors
    hidden = ad.relu(_linear(x, p[f"{prefix}.ff.w1"], p[f"{prefix}.ff.b1"]))
    return _linear(hidden, p[f"{prefix}.ff.w2"], p[f"{prefix}.ff.b2"])


def _norm(params: ModelParams, name: str, x: Tensor) -> Tensor:
    return ad.layer_norm(x, params.tensors[f"{name}.gain"], params.tensors[f"{name}.bias"])


def _embed(params: ModelParams, ids: np.ndarray) -> Tensor:
    tok = ad.embedding_lookup(params.tensors["tok_emb"], ids)
    pos = ad.slice_(params.tensors["pos_emb"], slice(0, len(ids)))
    return ad.add(tok, pos)


def _check_ids(config: ModelConfig, ids: np.ndarray, what: str, min_len: int) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if not min_len <= len(ids) <= config.max_seq_len:
        raise ModelError(f"{what} length {len(ids)} outside [{min_len}, {config.max_seq_len}]")
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise ModelError(f"{what} contains id outside vocabulary of size {config.vocab_size}")
    return ids


def _encoder_stack(
    params: ModelParams,
    src_ids: np.ndarray,
    pad_id: int,
    drop: tuple[float, np.random.Generator] | None = None,
) -> Tensor:
    key_is_pad = src_ids == pad_id
    mask = np.broadcast_to(key_is_pad, (len(src_ids), len(src_ids))) if key_is_pad.any() else None
    x = _dropout(_embed(params, src_ids), drop)
    for i in range(params.config.num_encoder_layers):
        attn = _multi_head_attention(params, f"enc{i}.attn", x, x, mask)
        x = _norm(params, f"enc{i}.norm1", ad.add(x, _dropout(attn, drop)))
        ff = _feed_forward(params, f"enc{i}", x)
        x = _norm(params, f"enc{i}.norm2", ad.add(x, _dropout(ff, drop)))
    return x


def _decoder_stack(
    params: ModelParams,
    memory: Tensor,
    tgt_ids: np.ndarray,
    memory_pad: np.ndarray | None = None,
    drop: tuple[float, np.random.Generator] | None = None,
) -> Tensor:
    t = len(tgt_ids)
    causal = np.triu(np.ones((t, t), dtype=bool), k=1)
    cross_mask = np.broadcast_to(memory_pad, (t, memory.shape[0])) if memory_pad is not None and memory_pad.any() else None
    x = _dropout(_embed(params, tgt_ids), drop)
    for i in range(params.config.num_decoder_layers):
        self_attn = _multi_head_attention(params, f"dec{i}.self", x, x, causal)
        x = _norm(params, f"dec{i}.norm1", ad.add(x, _dropout(self_attn, drop)))
        cross = _multi_head_attention(params, f"dec{i}.cross", x, memory, cross_mask)
        x = _norm(params, f"dec{i}.norm2", ad.add(x, _dropout(cross, drop)))
        ff = _feed_forward(params, f"dec{i}", x)
        x = _norm(params, f"dec{i}.norm3", ad.add(x, _dropout(ff, drop)))
    return _linear(x, params.tensors["out.w"], params.tensors["out.b"])


def encode(params: ModelParams, src_ids, pad_id: int = PAD_ID) -> Tensor:
    """Run the encoder; returns memory of shape [len(src_ids), embed_size].

    Padding positions are masked out of every attention, so appending pads
    leaves the other rows' values unchanged.
    """
    ids = _check_ids(params.config, src_ids, "src_ids", min_len=2)
    return _encoder_stack(params, ids, pad_id)


def decode_logits(params: ModelParams, memory: Tensor, tgt_prefix_ids, memory_pad: np.ndarray | None = None) -> Tensor:
    """Next-token logits for every prefix position: row i predicts token i+1."""
    ids = _check_ids(params.config, tgt_prefix_ids, "tgt_prefix_ids", min_len=1)
    if memory.shape[-1] != params.config.embed_size:
        raise ModelError(f"memory width {memory.shape[-1]} != embed_size {params.config.embed_size}")
    return _decoder_stack(params, memory, ids, memory_pad)


def pad_batch(batch: Sequence[EncodedExample], pad_id: int = PAD_ID) -> tuple[np.ndarray, np.ndarray]:
    """Pad src and tgt id sequences to per-batch common lengths."""
    src_len = max(len(ex.src_ids) for ex in batch)
    tgt_len = max(len(ex.tgt_ids) for ex in batch)
    src = np.full((len(batch), src_len), pad_id, dtype=np.int64)
    tgt = np.full((len(batch), tgt_len), pad_id, dtype=np.int64)
    for row, ex in enumerate(batch):
        src[row, : len(ex.src_ids)] = ex.src_ids
        tgt[row, : len(ex.tgt_ids)] = ex.tgt_ids
    return src, tgt


def forward_loss(
    params: ModelParams,
    batch: Sequence[EncodedExample],
    pad_id: int = PAD_ID,
    dropout_rng: np.random.Generator | None = None,
) -> Tensor:
    """Teacher-forced mean cross-entropy over non-pad target positions."""
    if not batch:
        raise ModelError("batch is empty")
    drop = (params.config.dropout, dropout_rng) if dropout_rng is not None and params.config.dropout > 0 else None
    src, tgt = pad_batch(batch, pad_id)
    total: Tensor | None = None
    count = 0
    for row in range(len(batch)):
        src_ids = _check_ids(params.config, src[row], "src_ids", min_len=2)
        tgt_in = tgt[row, :-1]
        labels = tgt[row, 1:]
        label_mask = labels != pad_id
        if not label_mask.any():
            continue
        memory = _encoder_stack(params, src_ids, pad_id, drop)
        logits = _decoder_stack(params, memory, tgt_in, src_ids == pad_id, drop)
        picked = ad.gather(ad.log_softmax(logits), np.where(label_mask, labels, 0))
        masked = ad.mul(picked, Tensor(label_mask.astype(picked.data.dtype)))
        part = ad.sum_(masked)
        total = part if total is None else ad.add(total, part)
        count += int(label_mask.sum())
    if total is None:
        raise ModelError("batch contains only padding")
    return ad.scale(total, -1.0 / count)


def language_token_sensitivity(params: ModelParams, src_ids, token_ids: Sequence[int]) -> float:
    """Mean relative L2 change of encoder memory when the leading language
    token is swapped. Reported as a diagnostic, not asserted."""
    ids = np.asarray(src_ids, dtype=np.int64)
    base = encode(params, ids).data
    base_norm = float(np.linalg.norm(base))
    diffs = []
    for tok in token_ids:
        if tok == ids[0]:
            continue
        swapped = ids.copy()
        swapped[0] = tok
        diffs.append(float(np.linalg.norm(encode(params, swapped).data - base)) / max(base_norm, 1e-12))
    return float(np.mean(diffs)) if diffs else 0.0

"""Miniature attention sequence-to-sequence model with augmentation embeddings.

Architecture: single tanh-RNN encoder over token embeddings; the per-example
augmentation embedding is concatenated to every encoder output, and attention
plus the decoder consume that concatenated memory. Additive (content-based)
attention; single tanh-RNN decoder with teacher forcing; linear output and
gate heads over (state, context).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    AugIdOutOfRange,
    MalformedCheckpoint,
    ShapeMismatch,
)
from . import autodiff as ad
from .autodiff import Tensor

TOYM_MAGIC = b"TOYM"
TOYM_VERSION = 1


@dataclass(frozen=True)
class ToyConfig:
    vocab_size: int = 12
    feat_dim: int = 16
    embed_dim: int = 16
    enc_hidden: int = 32
    aug_embed_dim: int = 4
    dec_hidden: int = 32
    attn_dim: int = 16
    n_aug_ids: int = 4
    max_decode_frames: int = 200
    gate_loss_weight: float = 1.0
    learning_rate: float = 1e-3
    grad_clip_norm: float = 1.0
    batch_size: int = 16
    steps: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        positive = (
            self.vocab_size,
            self.feat_dim,
            self.embed_dim,
            self.enc_hidden,
            self.dec_hidden,
            self.attn_dim,
            self.n_aug_ids,
            self.max_decode_frames,
            self.batch_size,
        )
        if any(v < 1 for v in positive):
            raise ValueError("all dimensions and counts must be >= 1")
        if self.aug_embed_dim < 0:
            raise ValueError("aug_embed_dim must be >= 0")

    @property
    def memory_dim(self) -> int:
        return self.enc_hidden + self.aug_embed_dim


def _param_shapes(cfg: ToyConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Fixed parameter order; row 0 of tok_emb is the padding token."""
    mem = cfg.memory_dim
    return [
        ("tok_emb", (cfg.vocab_size + 1, cfg.embed_dim)),
        ("enc_w_in", (cfg.embed_dim, cfg.enc_hidden)),
        ("enc_w_rec", (cfg.enc_hidden, cfg.enc_hidden)),
        ("enc_b", (cfg.enc_hidden,)),
        ("aug_emb", (cfg.n_aug_ids, cfg.aug_embed_dim)),
        ("attn_w_query", (cfg.dec_hidden, cfg.attn_dim)),
        ("attn_w_memory", (mem, cfg.attn_dim)),
        ("attn_b", (cfg.attn_dim,)),
        ("attn_v", (cfg.attn_dim, 1)),
        ("dec_w_in", (cfg.feat_dim + mem, cfg.dec_hidden)),
        ("dec_w_rec", (cfg.dec_hidden, cfg.dec_hidden)),
        ("dec_b", (cfg.dec_hidden,)),
        ("out_w", (cfg.dec_hidden + mem, cfg.feat_dim)),
        ("out_b", (cfg.feat_dim,)),
        ("gate_w", (cfg.dec_hidden + mem, 1)),
        ("gate_b", (1,)),
    ]


class ToyModel:
    """Parameter container; weights uniform +-1/sqrt(fan_in), biases zero."""

    def __init__(self, config: ToyConfig, init_seed: int | None = None):
        self.config = config
        seed = config.seed if init_seed is None else init_seed
        gen = np.random.Generator(np.random.Philox(key=seed))
        self.params: dict[str, Tensor] = {}
        for name, shape in _param_shapes(config):
            if name.endswith("_b"):
                data = np.zeros(shape)
            elif name.endswith("_emb"):
                data = gen.uniform(-0.5, 0.5, size=shape)
                if name == "tok_emb":
                    data[0] = 0.0  # padding row; masked attention keeps it at 0
            else:
                bound = 1.0 / np.sqrt(shape[0])
                data = gen.uniform(-bound, bound, size=shape)
            self.params[name] = Tensor(data)

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.grad = None


@dataclass
class Batch:
    tokens: np.ndarray  # (B, N) ints, 0 = padding
    token_mask: np.ndarray  # (B, N) bool
    aug_ids: np.ndarray  # (B,) ints
    targets: np.ndarray  # (B, T, M)
    frame_mask: np.ndarray  # (B, T) bool
    gate_targets: np.ndarray  # (B, T) float 0/1


@dataclass
class ForwardResult:
    predicted: Tensor  # (B, T, M)
    gate_logits: Tensor  # (B, T)
    attention: Tensor  # (B, T, N) rows stochastic over valid tokens
    loss: Tensor  # scalar
    mse: Tensor
    bce: Tensor


def make_batch(examples, cfg: ToyConfig) -> Batch:
    """Pad a list of ToyExample to rectangular arrays with masks."""
    b = len(examples)
    n_max = max(len(e.tokens) for e in examples)
    t_max = max(e.target_frames.shape[0] for e in examples)
    tokens = np.zeros((b, n_max), dtype=np.int64)
    token_mask = np.zeros((b, n_max), dtype=bool)
    aug_ids = np.zeros(b, dtype=np.int64)
    targets = np.zeros((b, t_max, cfg.feat_dim))
    frame_mask = np.zeros((b, t_max), dtype=bool)
    gates = np.zeros((b, t_max))
    for i, e in enumerate(examples):
        n = len(e.tokens)
        t = e.target_frames.shape[0]
        if e.target_frames.shape[1] != cfg.feat_dim:
            raise ShapeMismatch(
                f"example {i}: feat dim {e.target_frames.shape[1]} != {cfg.feat_dim}"
            )
        if any(tok < 1 or tok > cfg.vocab_size for tok in e.tokens):
            raise ShapeMismatch(f"example {i}: token outside [1, vocab_size]")
        if not 0 <= e.aug_id < cfg.n_aug_ids:
            raise AugIdOutOfRange(
                f"example {i}: aug_id {e.aug_id} not in [0, {cfg.n_aug_ids})"
            )
        tokens[i, :n] = e.tokens
        token_mask[i, :n] = True
        aug_ids[i] = e.aug_id
        targets[i, :t] = e.target_frames
        frame_mask[i, :t] = True
        gates[i, :t] = e.gate_targets
    return Batch(tokens, token_mask, aug_ids, targets, frame_mask, gates)


def _encode(model: ToyModel, batch: Batch) -> Tensor:
    """Token RNN + augmentation embedding concat: memory (B, N, mem_dim)."""
    p = model.params
    b, n = batch.tokens.shape
    emb = ad.embedding(p["tok_emb"], batch.tokens)  # (B, N, d_e)
    h = Tensor(np.zeros((b, model.config.enc_hidden)))
    states = []
    for step in range(n):
        x = ad.narrow(emb, (slice(None), step, slice(None)))
        pre = ad.add(
            ad.add(ad.matmul(x, p["enc_w_in"]), ad.matmul(h, p["enc_w_rec"])),
            p["enc_b"],
        )
        h = ad.tanh(pre)
        states.append(h)
    enc = ad.stack(states, axis=1)  # (B, N, d_h)
    aug = ad.embedding(p["aug_emb"], batch.aug_ids)  # (B, d_a)
    aug3 = ad.expand(
        ad.narrow(aug, (slice(None), None, slice(None))),
        (b, n, model.config.aug_embed_dim),
    )
    return ad.concat([enc, aug3], axis=2)


def forward(model: ToyModel, batch: Batch, teacher_forcing: bool = True) -> ForwardResult:
    """Teacher-forced pass with masked MSE + gate BCE loss."""
    cfg = model.config
    p = model.params
    b, t_max = batch.frame_mask.shape
    memory = _encode(model, batch)  # (B, N, mem)
    # memory projection reused by every decoder step
    mem_proj = ad.matmul(memory, p["attn_w_memory"])  # (B, N, d_att)

    state = Tensor(np.zeros((b, cfg.dec_hidden)))
    context = Tensor(np.zeros((b, cfg.memory_dim)))
    prev_frame = Tensor(np.zeros((b, cfg.feat_dim)))
    preds, gate_logits, attn_rows = [], [], []
    for step in range(t_max):
        dec_in = ad.concat([prev_frame, context], axis=1)
        pre = ad.add(
            ad.add(ad.matmul(dec_in, p["dec_w_in"]), ad.matmul(state, p["dec_w_rec"])),
            p["dec_b"],
        )
        state = ad.tanh(pre)
        query = ad.matmul(state, p["attn_w_query"])  # (B, d_att)
        scores = ad.tanh(
            ad.add(
                ad.add(ad.narrow(query, (slice(None), None, slice(None))), mem_proj),
                p["attn_b"],
            )
        )  # (B, N, d_att)
        energies = ad.narrow(ad.matmul(scores, p["attn_v"]), (slice(None), slice(None), 0))
        alpha = ad.masked_softmax(energies, batch.token_mask)  # (B, N)
        attn_rows.append(alpha)
        context = ad.narrow(
            ad.matmul(ad.narrow(alpha, (slice(None), None, slice(None))), memory),
            (slice(None), 0, slice(None)),
        )  # (B, mem)
        head_in = ad.concat([state, context], axis=1)
        y = ad.add(ad.matmul(head_in, p["out_w"]), p["out_b"])  # (B, M)
        g = ad.narrow(ad.add(ad.matmul(head_in, p["gate_w"]), p["gate_b"]), (slice(None), 0))
        preds.append(y)
        gate_logits.append(g)
        if teacher_forcing:
            prev_frame = Tensor(batch.targets[:, step, :])
        else:
            prev_frame = y

    predicted = ad.stack(preds, axis=1)  # (B, T, M)
    gates = ad.stack(gate_logits, axis=1)  # (B, T)
    attention = ad.stack(attn_rows, axis=1)  # (B, T, N)
    mse = ad.masked_mse(predicted, batch.targets, batch.frame_mask)
    bce = ad.masked_bce_logits(gates, batch.gate_targets, batch.frame_mask)
    loss = ad.add(mse, ad.scale(bce, cfg.gate_loss_weight))
    return ForwardResult(predicted, gates, attention, loss, mse, bce)


def attention_matrices(result: ForwardResult, batch: Batch):
    """Per-example (valid_frames x valid_tokens) attention weight arrays."""
    out = []
    att = result.attention.data
    for i in range(att.shape[0]):
        t = int(batch.frame_mask[i].sum())
        n = int(batch.token_mask[i].sum())
        out.append(att[i, :t, :n])
    return out


def infer(
    model: ToyModel, tokens: list[int], aug_id: int, gate_threshold: float = 0.5
):
    """Autoregressive decoding; stops at gate > threshold or max_decode_frames.

    Returns (frames (T, M), gate_probs (T,), attention (T, N)).
    """
    cfg = model.config
    if not 0 <= aug_id < cfg.n_aug_ids:
        raise AugIdOutOfRange(f"aug_id {aug_id} not in [0, {cfg.n_aug_ids})")
    if any(tok < 1 or tok > cfg.vocab_size for tok in tokens):
        raise ShapeMismatch("token outside [1, vocab_size]")
    p = model.params
    n = len(tokens)
    probe = Batch(
        tokens=np.asarray(tokens, dtype=np.int64)[None, :],
        token_mask=np.ones((1, n), dtype=bool),
        aug_ids=np.asarray([aug_id]),
        targets=np.zeros((1, 1, cfg.feat_dim)),
        frame_mask=np.ones((1, 1), dtype=bool),
        gate_targets=np.zeros((1, 1)),
    )
    memory = _encode(model, probe).data[0]  # (N, mem)
    mem_proj = memory @ p["attn_w_memory"].data  # (N, d_att)

    state = np.zeros(cfg.dec_hidden)
    context = np.zeros(cfg.memory_dim)
    prev = np.zeros(cfg.feat_dim)
    frames, gate_probs, attn = [], [], []
    for _ in range(cfg.max_decode_frames):
        dec_in = np.concatenate([prev, context])
        state = np.tanh(
            dec_in @ p["dec_w_in"].data + state @ p["dec_w_rec"].data + p["dec_b"].data
        )
        query = state @ p["attn_w_query"].data
        scores = np.tanh(query[None, :] + mem_proj + p["attn_b"].data)
        energies = (scores @ p["attn_v"].data)[:, 0]
        ez = np.exp(energies - energies.max())
        alpha = ez / ez.sum()
        context = alpha @ memory
        head_in = np.concatenate([state, context])
        y = head_in @ p["out_w"].data + p["out_b"].data
        g = float((head_in @ p["gate_w"].data)[0] + p["gate_b"].data[0])
        gate_prob = 1.0 / (1.0 + np.exp(-g))
        frames.append(y)
        gate_probs.append(gate_prob)
        attn.append(alpha)
        prev = y
        if gate_prob > gate_threshold:
            break
    return np.array(frames), np.array(gate_probs), np.array(attn)


# --- TOYM checkpoint: magic, version, config block, parameter blocks ---

_CONFIG_INTS = (
    "vocab_size",
    "feat_dim",
    "embed_dim",
    "enc_hidden",
    "aug_embed_dim",
    "dec_hidden",
    "attn_dim",
    "n_aug_ids",
    "max_decode_frames",
    "batch_size",
    "steps",
)
_CONFIG_FLOATS = ("gate_loss_weight", "learning_rate", "grad_clip_norm")


def save_model(model: ToyModel, path: str | Path) -> None:
    cfg = model.config
    blob = bytearray()
    blob += TOYM_MAGIC
    blob += struct.pack("<I", TOYM_VERSION)
    for name in _CONFIG_INTS:
        blob += struct.pack("<I", getattr(cfg, name))
    for name in _CONFIG_FLOATS:
        blob += struct.pack("<d", getattr(cfg, name))
    blob += struct.pack("<Q", cfg.seed)
    for name, shape in _param_shapes(cfg):
        data = model.params[name].data
        if data.shape != shape:
            raise MalformedCheckpoint(f"{name}: shape drifted from config")
        blob += struct.pack("<Q", data.size)
        blob += data.astype("<f8").tobytes(order="C")
    Path(path).write_bytes(bytes(blob))


def load_model(path: str | Path) -> ToyModel:
    raw = Path(path).read_bytes()
    if raw[:4] != TOYM_MAGIC:
        raise MalformedCheckpoint("bad magic")
    try:
        (version,) = struct.unpack_from("<I", raw, 4)
        if version != TOYM_VERSION:
            raise MalformedCheckpoint(f"unsupported version {version}")
        pos = 8
        values: dict[str, object] = {}
        for name in _CONFIG_INTS:
            (values[name],) = struct.unpack_from("<I", raw, pos)
            pos += 4
        for name in _CONFIG_FLOATS:
            (values[name],) = struct.unpack_from("<d", raw, pos)
            pos += 8
        (values["seed"],) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        cfg = ToyConfig(**values)
        model = ToyModel(cfg)
        for name, shape in _param_shapes(cfg):
            (count,) = struct.unpack_from("<Q", raw, pos)
            pos += 8
            expect = int(np.prod(shape)) if shape else 1
            if count != expect:
                raise MalformedCheckpoint(f"{name}: {count} values, expected {expect}")
            if pos + 8 * count > len(raw):
                raise MalformedCheckpoint(f"{name}: parameter block truncated")
            data = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(shape)
            pos += 8 * count
            model.params[name] = Tensor(data.copy())
    except (struct.error, ValueError) as exc:
        raise MalformedCheckpoint(f"checkpoint does not parse: {exc}") from exc
    if pos != len(raw):
        raise MalformedCheckpoint(f"{len(raw) - pos} trailing bytes")
    return model

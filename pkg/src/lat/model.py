"""Toy conditional masked LM with a recurrent local translation head.

Encoder and decoder are pre-norm transformer stacks. A LENGTH token is
prepended to the source and its final state predicts the target length.
The decoder sees the (partially masked) target bidirectionally and emits
one hidden vector per position; the local head is an LSTM cell started
from that vector which spells out the next K tokens.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

from . import nn
from .core import EOS, LENGTH, MASK, PAD, SOP, Piece

# never produced by the local head
EXCLUDED_OUTPUTS = (MASK, SOP, LENGTH)


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 32
    heads: int = 2
    ffn_dim: int = 64
    enc_layers: int = 1
    dec_layers: int = 1
    K: int = 3
    max_len: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.vocab_size <= LENGTH:
            raise ValueError("vocab_size must cover the reserved symbols")

    def to_dict(self) -> dict:
        return asdict(self)


def _block_shapes(prefix, d, f, cross):
    shapes = [(f"{prefix}.ln1.g", (d,)), (f"{prefix}.ln1.b", (d,))]
    shapes += [(f"{prefix}.self.{w}", (d, d)) for w in "qkvo"]
    n = 2
    if cross:
        shapes += [(f"{prefix}.ln2.g", (d,)), (f"{prefix}.ln2.b", (d,))]
        shapes += [(f"{prefix}.cross.{w}", (d, d)) for w in "qkvo"]
        n = 3
    shapes += [(f"{prefix}.ln{n}.g", (d,)), (f"{prefix}.ln{n}.b", (d,)),
               (f"{prefix}.ffn.w1", (d, f)), (f"{prefix}.ffn.b1", (f,)),
               (f"{prefix}.ffn.w2", (f, d)), (f"{prefix}.ffn.b2", (d,))]
    return shapes


def param_shapes(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Names and shapes of every trainable array, in checkpoint order."""
    d, f, v, L = cfg.d_model, cfg.ffn_dim, cfg.vocab_size, cfg.max_len
    shapes = [("emb", (v, d)), ("enc_pos", (L, d)), ("dec_pos", (L, d))]
    for layer in range(cfg.enc_layers):
        shapes += _block_shapes(f"enc{layer}", d, f, cross=False)
    shapes += [("enc_lnf.g", (d,)), ("enc_lnf.b", (d,))]
    for layer in range(cfg.dec_layers):
        shapes += _block_shapes(f"dec{layer}", d, f, cross=True)
    shapes += [("dec_lnf.g", (d,)), ("dec_lnf.b", (d,)),
               ("len.w", (d, L)), ("len.b", (L,)),
               ("lstm.wx", (d, 4 * d)), ("lstm.wh", (d, 4 * d)), ("lstm.b", (4 * d,)),
               ("out.w", (d, v)), ("out.b", (v,))]
    return shapes


def param_count(cfg: ModelConfig) -> int:
    d, f, v, L = cfg.d_model, cfg.ffn_dim, cfg.vocab_size, cfg.max_len
    ffn = 2 * d * f + f + d
    enc = 4 * d + 4 * d * d + ffn
    dec = 6 * d + 8 * d * d + ffn
    head = d * L + L + 8 * d * d + 4 * d + d * v + v
    return v * d + 2 * L * d + cfg.enc_layers * enc + cfg.dec_layers * dec + 4 * d + head


def init_params(cfg: ModelConfig, zero: bool = False) -> dict[str, np.ndarray]:
    """Weights ~ N(0, 0.02), biases 0, norm gains 1 (all zeros if ``zero``).

    Token embeddings are N(0, 1) and position tables start as sinusoids.
    """
    rng = np.random.default_rng(cfg.seed)
    params = {}
    for name, shape in param_shapes(cfg):
        if zero:
            params[name] = np.zeros(shape)
        elif name.endswith(".g"):
            params[name] = np.ones(shape)
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.normal(0.0, 0.02, shape)
    if not zero:
        # unit-scale embeddings, sinusoid-initialised position tables
        params["emb"] = rng.normal(0.0, 1.0, params["emb"].shape)
        params["enc_pos"] = sinusoid(cfg.max_len, cfg.d_model)
        params["dec_pos"] = sinusoid(cfg.max_len, cfg.d_model)
        # forget-gate bias 1 keeps early gradients flowing through the cell
        params["lstm.b"][cfg.d_model:2 * cfg.d_model] = 1.0
    return params


def sinusoid(n: int, d: int) -> np.ndarray:
    """(n, d) table of interleaved sin/cos position features."""
    pos = np.arange(n)[:, None]
    freq = np.exp(-np.log(10000.0) * (np.arange(0, d, 2) / d))
    table = np.zeros((n, d))
    table[:, 0::2] = np.sin(pos * freq)
    table[:, 1::2] = np.cos(pos * freq[: d // 2])
    return table


def _pad(rows: Sequence[Sequence[int]], width: int | None = None):
    width = max(len(r) for r in rows) if width is None else width
    out = np.full((len(rows), width), PAD, dtype=np.int64)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    lengths = np.array([len(r) for r in rows])
    return out, np.arange(width)[None, :] >= lengths[:, None]


class Model:
    """Parameters plus the forward computations used for decoding."""

    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray] | None = None):
        self.config = config
        self.params = init_params(config) if params is None else params

    # -- batched forward, with optional caches for backprop --------------

    def _block(self, prefix, x, x_pad, mem=None, mem_pad=None, caches=None):
        p, H = self.params, self.config.heads
        n = 1
        h, c1 = nn.layer_norm_fwd(x, p[f"{prefix}.ln1.g"], p[f"{prefix}.ln1.b"])
        a, c2 = nn.attention_fwd(h, h, *(p[f"{prefix}.self.{w}"] for w in "qkvo"), x_pad, H)
        x = x + a
        step = [("ln", f"{prefix}.ln1", c1), ("self", f"{prefix}.self", c2)]
        if mem is not None:
            h, c3 = nn.layer_norm_fwd(x, p[f"{prefix}.ln2.g"], p[f"{prefix}.ln2.b"])
            a, c4 = nn.attention_fwd(h, mem, *(p[f"{prefix}.cross.{w}"] for w in "qkvo"),
                                     mem_pad, H)
            x = x + a
            step += [("ln", f"{prefix}.ln2", c3), ("cross", f"{prefix}.cross", c4)]
            n = 2
        h, c5 = nn.layer_norm_fwd(x, p[f"{prefix}.ln{n + 1}.g"], p[f"{prefix}.ln{n + 1}.b"])
        f, c6 = nn.ffn_fwd(h, p[f"{prefix}.ffn.w1"], p[f"{prefix}.ffn.b1"],
                           p[f"{prefix}.ffn.w2"], p[f"{prefix}.ffn.b2"])
        step += [("ln", f"{prefix}.ln{n + 1}", c5), ("ffn", f"{prefix}.ffn", c6)]
        if caches is not None:
            caches.append(step)
        return x + f

    def encode_batch(self, sources: Sequence[Sequence[int]], caches=None):
        cfg, p = self.config, self.params
        if max(len(s) for s in sources) + 1 > cfg.max_len:
            raise ValueError("source too long")
        src, src_pad = _pad([[LENGTH] + list(s) for s in sources])
        x = p["emb"][src] + p["enc_pos"][:src.shape[1]]
        for layer in range(cfg.enc_layers):
            x = self._block(f"enc{layer}", x, src_pad, caches=caches)
        enc, c = nn.layer_norm_fwd(x, p["enc_lnf.g"], p["enc_lnf.b"])
        logits = enc[:, 0] @ p["len.w"] + p["len.b"]
        if caches is not None:
            caches.append(c)
        return enc, src_pad, logits, src

    def decode_batch(self, targets: Sequence[Sequence[int]], enc, src_pad, caches=None):
        cfg, p = self.config, self.params
        if max(len(t) for t in targets) > cfg.max_len:
            raise ValueError("target too long")
        tgt, tgt_pad = _pad(targets)
        y = p["emb"][tgt] + p["dec_pos"][:tgt.shape[1]]
        for layer in range(cfg.dec_layers):
            y = self._block(f"dec{layer}", y, tgt_pad, enc, src_pad, caches=caches)
        pos, c = nn.layer_norm_fwd(y, p["dec_lnf.g"], p["dec_lnf.b"])
        if caches is not None:
            caches.append(c)
        return pos, tgt_pad, tgt

    def head_logprobs(self, pos: np.ndarray, inputs: np.ndarray, caches=None):
        """Teacher-forced local head: ``inputs`` (P, K) are the step inputs."""
        p = self.params
        h, c = pos, np.zeros_like(pos)
        out = []
        for j in range(inputs.shape[1]):
            h, c, cache = nn.lstm_step_fwd(p["emb"][inputs[:, j]], h, c,
                                           p["lstm.wx"], p["lstm.wh"], p["lstm.b"])
            lp = nn.log_softmax(h @ p["out.w"] + p["out.b"], EXCLUDED_OUTPUTS)
            out.append(lp)
            if caches is not None:
                caches.append((cache, h, lp))
        return np.stack(out, axis=1)

    def greedy_batch(self, pos: np.ndarray, K: int | None = None):
        """Greedy local translation for every row of ``pos``: (ids, scores)."""
        p = self.params
        K = self.config.K if K is None else K
        n = pos.shape[0]
        h, c = pos, np.zeros_like(pos)
        tok = np.full(n, SOP, dtype=np.int64)
        ids = np.empty((n, K), dtype=np.int64)
        scores = np.empty((n, K))
        for j in range(K):
            h, c, _ = nn.lstm_step_fwd(p["emb"][tok], h, c, p["lstm.wx"], p["lstm.wh"], p["lstm.b"])
            lp = nn.log_softmax(h @ p["out.w"] + p["out.b"], EXCLUDED_OUTPUTS)
            tok = lp.argmax(-1)
            ids[:, j] = tok
            scores[:, j] = lp[np.arange(n), tok]
        return ids, scores

    # -- single-sentence API ----------------------------------------------

    def encode(self, source: Sequence[int]):
        """Encoder states (len + 1, d) and length logits over classes 1..max_len."""
        enc, _, logits, _ = self.encode_batch([source])
        return enc[0], logits[0]

    def decode_positions(self, target_in: Sequence[int], enc_states: np.ndarray) -> np.ndarray:
        if len(target_in) == 0:
            return np.zeros((0, self.config.d_model))
        pos, _, _ = self.decode_batch([target_in], enc_states[None],
                                      np.zeros((1, enc_states.shape[0]), dtype=bool))
        return pos[0]

    def local_translate_greedy(self, pos_i: np.ndarray, K: int | None = None,
                               anchor: int = 0) -> Piece:
        ids, scores = self.greedy_batch(pos_i[None], K)
        return pieces_from_outputs(ids, scores, anchors=[anchor])[0]

    def local_translate_teacher(self, pos_i: np.ndarray, gold: Sequence[int]) -> np.ndarray:
        gold = np.asarray(gold, dtype=np.int64)
        inputs = np.concatenate([[SOP], gold[:-1]])[None]
        lp = self.head_logprobs(pos_i[None], inputs)[0]
        return lp[np.arange(len(gold)), gold]


def pieces_from_outputs(ids: np.ndarray, scores: np.ndarray,
                        anchors: Sequence[int] | None = None) -> list[Piece]:
    """Build pieces, cutting each at its first EOS or PAD."""
    pieces = []
    for row in range(ids.shape[0]):
        anchor = row if anchors is None else anchors[row]
        toks, scs = [], []
        for t, s in zip(ids[row].tolist(), scores[row].tolist()):
            if t in (EOS, PAD):
                break
            toks.append(t)
            scs.append(s)
        pieces.append(Piece.from_outputs(anchor, toks, scs))
    return pieces

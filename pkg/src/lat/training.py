"""Training: mask sampling, deletion augmentation, the weighted loss and
its analytic gradient, and a seeded Adam loop."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import nn
from .core import EOS, MASK, PAD, SOP
from .model import Model

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.1
    delete_frac: float = 0.15
    # share of examples that get deletion augmentation at all
    delete_prob: float = 0.5
    lr: float = 1e-3
    batch_size: int = 32
    steps: int = 1000
    grad_clip: float = 1.0
    warmup: int = 100
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0 <= self.delete_frac < 1:
            raise ValueError("delete_frac must lie in [0, 1)")
        if not 0 <= self.delete_prob <= 1:
            raise ValueError("delete_prob must lie in [0, 1]")


@dataclass
class TrainExample:
    """One source/target pair after masking and (optional) deletion.

    ``origins[i]`` is the original target index behind decoder input ``i``.
    """

    source: list[int]
    target: list[int]  # without EOS; EOS is implied at index len(target)
    dec_input: list[int]
    origins: list[int]
    masked: frozenset = field(default_factory=frozenset)

    def gold(self, K: int) -> np.ndarray:
        return np.array([gold_window(self.target, o, K) for o in self.origins], dtype=np.int64)

    def weights(self, K: int, alpha: float) -> np.ndarray:
        n = len(self.target)
        w = np.zeros((len(self.origins), K))
        for i, o in enumerate(self.origins):
            for j in range(K):
                idx = o + j
                if idx <= n:
                    # EOS (idx == n) is never in the decoder input, so never masked
                    w[i, j] = 1.0 if idx in self.masked else alpha
        return w


def gold_window(target: Sequence[int], start: int, K: int) -> list[int]:
    """``target[start:start+K]`` continued by EOS and then PAD."""
    ext = list(target) + [EOS] + [PAD] * K
    return ext[start:start + K]


def mask_sample(rng: np.random.Generator, target: Sequence[int]):
    """Mask m ~ U{1..N} distinct positions. Returns (masked input, masked index set)."""
    n = len(target)
    if n < 1:
        raise ValueError("empty target")
    m = int(rng.integers(1, n + 1))
    idx = rng.choice(n, size=m, replace=False)
    masked = list(target)
    for i in idx:
        masked[i] = MASK
    return masked, frozenset(int(i) for i in idx)


def realign(masked_input: Sequence[int], labels: Sequence[int], deleted, K: int):
    """Drop ``deleted`` decoder inputs; surviving inputs keep their original gold."""
    gone = set(deleted)
    origins = [i for i in range(len(masked_input)) if i not in gone]
    return ([masked_input[i] for i in origins], origins,
            [gold_window(labels, o, K) for o in origins])


def deletion_augment(rng: np.random.Generator, masked_input: Sequence[int],
                     labels: Sequence[int], K: int, delete_frac: float = 0.15):
    """Delete d ~ U{1..max(1, floor(delete_frac * N))} decoder inputs.

    Returns (shortened input, origins, gold windows).
    """
    n = len(masked_input)
    if n < 2:
        raise ValueError("need at least two positions to delete from")
    d_max = max(1, math.floor(delete_frac * n))
    d = int(rng.integers(1, d_max + 1))
    deleted = rng.choice(n, size=d, replace=False)
    return realign(masked_input, labels, deleted.tolist(), K)


def make_example(rng, source, target, K: int, cfg: TrainConfig) -> TrainExample:
    masked_input, masked = mask_sample(rng, target)
    origins = list(range(len(target)))
    dec_input = masked_input
    if len(target) >= 2 and rng.random() < cfg.delete_prob:
        dec_input, origins, _ = deletion_augment(rng, masked_input, target, K, cfg.delete_frac)
    return TrainExample(list(source), list(target), dec_input, origins, masked)


# -- loss and gradient ----------------------------------------------------

def _block_bwd(model, step, dx, grads):
    p = model.params
    dmem = None
    for (_, ln_name, ln_cache), (kind, name, cache) in reversed(list(zip(step[::2], step[1::2]))):
        if kind == "ffn":
            dh, (dw1, db1, dw2, db2) = nn.ffn_bwd(dx, cache)
            for k, g in zip(("w1", "b1", "w2", "b2"), (dw1, db1, dw2, db2)):
                grads[f"{name}.{k}"] += g
        else:
            dxq, dxkv, gw = nn.attention_bwd(dx, cache)
            for k, g in zip("qkvo", gw):
                grads[f"{name}.{k}"] += g
            if kind == "self":
                dh = dxq + dxkv
            else:
                dh = dxq
                dmem = dxkv
        dln, (dg, db) = nn.layer_norm_bwd(dh, ln_cache)
        grads[f"{ln_name}.g"] += dg
        grads[f"{ln_name}.b"] += db
        dx = dx + dln
    return dx, dmem


def training_loss(model: Model, batch: Sequence[TrainExample], alpha: float,
                  need_grad: bool = True):
    """Summed weighted token NLL plus length NLL over the batch.

    Masked gold tokens weigh 1; visible ones and EOS weigh ``alpha``; PAD 0.
    Returns ``(loss, grads)``; grads is None when ``need_grad`` is False.
    """
    if not batch:
        raise ValueError("empty batch")
    cfg, p = model.config, model.params
    K = cfg.K
    enc_caches, dec_caches, head_caches = [], [], []
    keep = enc_caches if need_grad else None
    enc, src_pad, len_logits, src = model.encode_batch([e.source for e in batch], keep)
    keep = dec_caches if need_grad else None
    pos, tgt_pad, tgt = model.decode_batch([e.dec_input for e in batch], enc, src_pad, keep)

    B, T, d = pos.shape
    flat = np.flatnonzero(~tgt_pad.reshape(-1))
    gold = np.concatenate([e.gold(K) for e in batch])
    w = np.concatenate([e.weights(K, alpha) for e in batch])
    inputs = np.concatenate([np.full((len(gold), 1), SOP), gold[:, :-1]], axis=1)
    lp = model.head_logprobs(pos.reshape(-1, d)[flat], inputs,
                             head_caches if need_grad else None)
    rows = np.arange(len(gold))
    token_nll = -sum((w[:, j] * lp[rows, j, gold[:, j]]).sum() for j in range(K))

    len_lp = nn.log_softmax(len_logits)
    labels = np.array([len(e.target) - 1 for e in batch])
    if labels.max() >= cfg.max_len:
        raise ValueError("target too long")
    length_nll = -len_lp[np.arange(B), labels].sum()
    loss = float(token_nll + length_nll)
    if not math.isfinite(loss):
        raise DivergenceError("numerical divergence")
    if not need_grad:
        return loss, None

    grads = {k: np.zeros_like(v) for k, v in p.items()}
    demb = grads["emb"]

    # local head
    dh_next = np.zeros((len(gold), d))
    dc_next = np.zeros((len(gold), d))
    for j in reversed(range(K)):
        cache, h, lpj = head_caches[j]
        dlogit = np.exp(lpj)
        dlogit[rows, gold[:, j]] -= 1.0
        dlogit *= w[:, j:j + 1]
        grads["out.w"] += h.T @ dlogit
        grads["out.b"] += dlogit.sum(0)
        dh = dlogit @ p["out.w"].T + dh_next
        dx, dh_next, dc_next, (dwx, dwh, db) = nn.lstm_step_bwd(dh, dc_next, cache,
                                                                p["lstm.wx"], p["lstm.wh"])
        grads["lstm.wx"] += dwx
        grads["lstm.wh"] += dwh
        grads["lstm.b"] += db
        np.add.at(demb, inputs[:, j], dx)
    dpos = np.zeros((B * T, d))
    dpos[flat] = dh_next
    dpos = dpos.reshape(B, T, d)

    # decoder
    dy, (dg, db) = nn.layer_norm_bwd(dpos, dec_caches[-1])
    grads["dec_lnf.g"] += dg
    grads["dec_lnf.b"] += db
    denc = np.zeros_like(enc)
    for layer in reversed(range(cfg.dec_layers)):
        dy, dmem = _block_bwd(model, dec_caches[layer], dy, grads)
        denc += dmem
    np.add.at(demb, tgt, dy)
    grads["dec_pos"][:T] += dy.sum(0)

    # length head and encoder
    dlen = np.exp(len_lp)
    dlen[np.arange(B), labels] -= 1.0
    grads["len.w"] += enc[:, 0].T @ dlen
    grads["len.b"] += dlen.sum(0)
    denc[:, 0] += dlen @ p["len.w"].T
    dx, (dg, db) = nn.layer_norm_bwd(denc, enc_caches[-1])
    grads["enc_lnf.g"] += dg
    grads["enc_lnf.b"] += db
    for layer in reversed(range(cfg.enc_layers)):
        dx, _ = _block_bwd(model, enc_caches[layer], dx, grads)
    np.add.at(demb, src, dx)
    grads["enc_pos"][:src.shape[1]] += dx.sum(0)
    return loss, grads


# -- optimisation ---------------------------------------------------------

def _adam_step(params, grads, state, lr, t, b1=0.9, b2=0.999, eps=1e-8):
    for k, g in grads.items():
        m, v = state[k]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        params[k] -= lr * mhat / (np.sqrt(vhat) + eps)


def train(model: Model, pairs: Sequence[tuple[Sequence[int], Sequence[int]]],
          cfg: TrainConfig, on_log: Callable[[int, float], None] | None = None) -> list[float]:
    """Train ``model`` in place; returns the per-step mean loss per example."""
    if not pairs:
        raise ValueError("empty corpus")
    rng = np.random.default_rng(cfg.seed)
    state = {k: (np.zeros_like(v), np.zeros_like(v)) for k, v in model.params.items()}
    trace = []
    for step in range(1, cfg.steps + 1):
        idx = rng.integers(0, len(pairs), size=cfg.batch_size)
        batch = [make_example(rng, *pairs[i], model.config.K, cfg) for i in idx]
        loss, grads = training_loss(model, batch, cfg.alpha)
        scale = 1.0 / len(batch)
        norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values())) * scale
        if cfg.grad_clip and norm > cfg.grad_clip:
            scale *= cfg.grad_clip / norm
        for g in grads.values():
            g *= scale
        lr = cfg.lr * min(1.0, step / cfg.warmup) if cfg.warmup else cfg.lr
        _adam_step(model.params, grads, state, lr, step)
        trace.append(loss / len(batch))
        if step % cfg.log_every == 0 or step == cfg.steps:
            recent = float(np.mean(trace[-cfg.log_every:]))
            log.info("step %d loss %.4f", step, recent)
            if on_log is not None:
                on_log(step, recent)
    return trace

"""Shared training recipe for the end-to-end toy checks."""
import time

from lat.core import build_vocab, encode_line
from lat.decode import DecodeConfig, iterative_decode
from lat.metrics import corpus_bleu
from lat.model import Model, ModelConfig
from lat.toy import mapping_task
from lat.training import TrainConfig, train

FULL = dict(d_model=64, heads=4, ffn_dim=128, max_len=16, steps=5000, lr=2e-3)


def train_toy(seed=0, d_model=64, heads=4, ffn_dim=128, max_len=16, steps=5000, lr=2e-3):
    train_lines, test_lines = mapping_task(seed)
    vocab = build_vocab([s for s, _ in train_lines] + [t for _, t in train_lines])
    enc = lambda lines: [(encode_line(vocab, s), encode_line(vocab, t)) for s, t in lines]  # noqa: E731
    cfg = ModelConfig(vocab_size=len(vocab), d_model=d_model, heads=heads, ffn_dim=ffn_dim,
                      max_len=max_len, K=3, seed=seed)
    model = Model(cfg)
    t0 = time.perf_counter()
    train(model, enc(train_lines), TrainConfig(steps=steps, lr=lr, seed=seed, log_every=10**9))
    return model, enc(test_lines), time.perf_counter() - t0


def evaluate(model, test, iterations):
    hyps = [iterative_decode(model, s, DecodeConfig(iterations=iterations)) for s, _ in test]
    refs = [t for _, t in test]
    exact = sum(h == r for h, r in zip(hyps, refs)) / len(refs)
    return hyps, exact, corpus_bleu(hyps, refs)

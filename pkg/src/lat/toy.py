"""Synthetic token-mapping task used for end-to-end checks."""
import numpy as np


def mapping_task(seed: int = 0, vocab: int = 20, min_len: int = 3, max_len: int = 12,
                 n_train: int = 2000, n_test: int = 200):
    """Parallel corpora where each target token is a fixed permutation of the
    source token at the same position. Returns (train, test) lists of
    (source line, target line)."""
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(vocab)]
    perm = rng.permutation(vocab)

    def sample(n):
        out = []
        for _ in range(n):
            ids = rng.integers(0, vocab, size=int(rng.integers(min_len, max_len + 1)))
            out.append((" ".join(words[i] for i in ids), " ".join(words[perm[i]] for i in ids)))
        return out

    return sample(n_train), sample(n_test)

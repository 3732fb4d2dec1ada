"""Independent oracles for the training loss."""
import numpy as np

from lat.model import Model
from lat.nn import log_softmax
from lat.training import gold_window, training_loss


def masked_only_ce(model: Model, batch) -> float:
    """Masked-gold cross-entropy plus length NLL, one sentence and one
    position at a time through the single-sentence API."""
    K = model.config.K
    total = 0.0
    for ex in batch:
        enc, logits = model.encode(ex.source)
        total -= log_softmax(logits[None])[0, len(ex.target) - 1]
        pos = model.decode_positions(ex.dec_input, enc)
        for i, o in enumerate(ex.origins):
            lp = model.local_translate_teacher(pos[i], gold_window(ex.target, o, K))
            total -= sum(lp[j] for j in range(K) if o + j in ex.masked)
    return total


def fd_check(model: Model, batch, alpha: float, h: float = 1e-4) -> dict[str, float]:
    """Max elementwise relative error of analytic vs central-difference grads."""
    _, grads = training_loss(model, batch, alpha)
    errors = {}
    for name, arr in model.params.items():
        num = np.zeros_like(arr)
        flat = arr.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            up, _ = training_loss(model, batch, alpha, need_grad=False)
            flat[k] = old - h
            down, _ = training_loss(model, batch, alpha, need_grad=False)
            flat[k] = old
            num.reshape(-1)[k] = (up - down) / (2 * h)
        a = grads[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), 1e-7)
        errors[name] = float((np.abs(a - num) / denom).max())
    return errors

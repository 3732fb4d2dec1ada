"""Forward/backward primitives for the toy model (float64 numpy).

Every ``*_fwd`` returns ``(out, cache)`` and the matching ``*_bwd`` takes
``(dout, cache)``. Parameter gradients are returned as tuples in the order
the parameters were passed in.
"""
import numpy as np

LN_EPS = 1e-5
NEG_INF = -1e9
_GELU_C = np.sqrt(2.0 / np.pi)


def layer_norm_fwd(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def layer_norm_bwd(dy, cache):
    xhat, inv, g = cache
    d = xhat.shape[-1]
    dg = (dy * xhat).reshape(-1, d).sum(0)
    db = dy.reshape(-1, d).sum(0)
    dxhat = dy * g
    dx = inv * (dxhat - dxhat.mean(-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, (dg, db)


def gelu_fwd(x):
    t = np.tanh(_GELU_C * (x + 0.044715 * x ** 3))
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_bwd(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3 * 0.044715 * x ** 2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def _mm_grad(x, dy):
    """sum over leading axes of x^T dy."""
    return x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])


def ffn_fwd(x, w1, b1, w2, b2):
    a = x @ w1 + b1
    h, gc = gelu_fwd(a)
    return h @ w2 + b2, (x, h, gc, w1, w2)


def ffn_bwd(dy, cache):
    x, h, gc, w1, w2 = cache
    dw2 = _mm_grad(h, dy)
    db2 = dy.reshape(-1, dy.shape[-1]).sum(0)
    da = gelu_bwd(dy @ w2.T, gc)
    dw1 = _mm_grad(x, da)
    db1 = da.reshape(-1, da.shape[-1]).sum(0)
    return da @ w1.T, (dw1, db1, dw2, db2)


def _split(x, heads):
    b, t, d = x.shape
    return x.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)


def _merge(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def attention_fwd(xq, xkv, wq, wk, wv, wo, key_pad, heads):
    """Multi-head attention; ``key_pad`` is a (B, Tk) bool array, True = ignore."""
    q, k, v = _split(xq @ wq, heads), _split(xkv @ wk, heads), _split(xkv @ wv, heads)
    scale = 1.0 / np.sqrt(q.shape[-1])
    s = q @ k.transpose(0, 1, 3, 2) * scale
    s = s + np.where(key_pad, NEG_INF, 0.0)[:, None, None, :]
    s = s - s.max(-1, keepdims=True)
    a = np.exp(s)
    a /= a.sum(-1, keepdims=True)
    ctx = _merge(a @ v)
    return ctx @ wo, (xq, xkv, q, k, v, a, ctx, scale, wq, wk, wv, wo, heads)


def attention_bwd(dy, cache):
    xq, xkv, q, k, v, a, ctx, scale, wq, wk, wv, wo, heads = cache
    dwo = _mm_grad(ctx, dy)
    dctx = _split(dy @ wo.T, heads)
    da = dctx @ v.transpose(0, 1, 3, 2)
    dv = a.transpose(0, 1, 3, 2) @ dctx
    ds = a * (da - (da * a).sum(-1, keepdims=True))
    dq = _merge(ds @ k) * scale
    dk = _merge(ds.transpose(0, 1, 3, 2) @ q) * scale
    dv = _merge(dv)
    dwq, dwk, dwv = _mm_grad(xq, dq), _mm_grad(xkv, dk), _mm_grad(xkv, dv)
    dxq = dq @ wq.T
    dxkv = dk @ wk.T + dv @ wv.T
    return dxq, dxkv, (dwq, dwk, dwv, dwo)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_step_fwd(x, h, c, wx, wh, b):
    d = h.shape[-1]
    z = x @ wx + h @ wh + b
    i, f = sigmoid(z[:, :d]), sigmoid(z[:, d:2 * d])
    g, o = np.tanh(z[:, 2 * d:3 * d]), sigmoid(z[:, 3 * d:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (x, h, c, i, f, g, o, tc)


def lstm_step_bwd(dh, dc, cache, wx, wh):
    x, h, c, i, f, g, o, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    dz = np.concatenate([dc * g * i * (1.0 - i), dc * c * f * (1.0 - f),
                         dc * i * (1.0 - g * g), do * o * (1.0 - o)], axis=-1)
    return dz @ wx.T, dz @ wh.T, dc * f, (x.T @ dz, h.T @ dz, dz.sum(0))


def log_softmax(z, excluded=None):
    if excluded is not None and len(excluded):
        z = z.copy()
        z[..., excluded] = -np.inf
    m = z.max(-1, keepdims=True)
    s = z - m
    return s - np.log(np.exp(s).sum(-1, keepdims=True))

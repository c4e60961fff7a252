"""Minimal differentiable ops for the surrogate cGAN.

Every op is a forward/backward pair in the classic layers-file style:
``forward`` returns ``(out, cache)``, ``backward`` consumes the upstream
gradient plus the cache.  The admissible layer set is closed (4x4 convs at
stride 1 or 2, transposed convs, batch norm, relu / leaky-relu / tanh /
sigmoid, dropout, channel concat) -- there is no general autodiff graph.

Convolutions accept ``layout="nchw"`` (the default, matching the (N, C, H,
W) tensor convention) or ``layout="nhwc"``.  Both run the same channels-last
GEMM core; the models use the nhwc path directly because its im2col copies
long contiguous runs instead of 4-float fragments, which is what makes CPU
training viable.  Weights always use (F, C, kh, kw) / (Cin, Cout, kh, kw)
storage regardless of layout.

Storage is float32; reductions (means, losses, normalization statistics)
accumulate in float64.  Ops preserve the input dtype, so gradient checks can
run entirely in float64.  Forward outputs are checked finite; NaN/Inf raises
``NonFiniteError``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class NonFiniteError(FloatingPointError):
    """A forward output or a gradient fed to the optimizer is NaN/Inf."""


PadSpec = int | tuple[tuple[int, int], tuple[int, int]]


def _pads(padding: PadSpec) -> tuple[tuple[int, int], tuple[int, int]]:
    if isinstance(padding, int):
        return ((padding, padding), (padding, padding))
    return padding


def _ensure_finite(arr: np.ndarray, what: str) -> None:
    # float64 accumulation cannot overflow for float32-scale data, so a
    # non-finite sum pinpoints NaN/Inf entries in one pass
    if not np.isfinite(arr.sum(dtype=np.float64)):
        raise NonFiniteError(f"{what} produced non-finite values")


# ---------------------------------------------------------------------------
# convolution (channels-last GEMM core, layout wrappers)


def _conv_core_forward(x, w, b, stride, pads, need_cache):
    """x: (N, H, W, C) against w: (F, C, kh, kw) -> (N, OH, OW, F)."""
    N, H, W, C = x.shape
    F, Cw, kh, kw = w.shape
    if C != Cw:
        raise ValueError(f"conv2d channel mismatch: input {C} vs weight {Cw}")
    (pt, pb), (pl, pr) = pads
    if pt or pb or pl or pr:
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    else:
        xp = x
    OH = (H + pt + pb - kh) // stride + 1
    OW = (W + pl + pr - kw) // stride + 1
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    cols = win.transpose(0, 1, 2, 4, 5, 3).reshape(N * OH * OW, kh * kw * C)
    w_mat = np.ascontiguousarray(w.transpose(2, 3, 1, 0).reshape(kh * kw * C, F))
    out = cols @ w_mat
    out += b
    out = out.reshape(N, OH, OW, F)
    _ensure_finite(out, "conv2d")
    cache = (cols, w, x.shape, stride, (pt, pb, pl, pr), (OH, OW)) if need_cache else None
    return out, cache


def _scatter_windows(dwin, N, OH, OW, kh, kw, C, hp, wp, stride, dtype):
    """col2im: accumulate per-offset window grads onto the padded canvas."""
    dxp = np.zeros((N, hp, wp, C), dtype=dtype)
    for ki in range(kh):
        for kj in range(kw):
            dxp[:, ki:ki + stride * OH:stride, kj:kj + stride * OW:stride, :] += \
                dwin[:, :, :, ki, kj, :]
    return dxp


def _conv_core_backward(dout, cache):
    cols, w, xshape, stride, pads, (OH, OW) = cache
    N, H, W, C = xshape
    F, _, kh, kw = w.shape
    pt, pb, pl, pr = pads
    d2 = dout.reshape(N * OH * OW, F)
    db = d2.sum(axis=0, dtype=np.float64).astype(dout.dtype)
    dw = (cols.T @ d2).reshape(kh, kw, C, F).transpose(3, 2, 0, 1)
    dw = np.ascontiguousarray(dw)
    dcols = d2 @ w.transpose(2, 3, 1, 0).reshape(kh * kw * C, F).T
    dwin = dcols.reshape(N, OH, OW, kh, kw, C)
    dxp = _scatter_windows(dwin, N, OH, OW, kh, kw, C, H + pt + pb, W + pl + pr,
                           stride, dout.dtype)
    dx = np.ascontiguousarray(dxp[:, pt:pt + H, pl:pl + W, :])
    return dx, dw, db


def _to_nhwc(x):
    return np.ascontiguousarray(x.transpose(0, 2, 3, 1))


def _to_nchw(x):
    return np.ascontiguousarray(x.transpose(0, 3, 1, 2))


def conv2d_forward(x, w, b, stride: int = 1, padding: PadSpec = 1,
                   layout: str = "nchw", need_cache: bool = True):
    """Cross-correlation with (F, C, kh, kw) weights.

    ``padding`` is symmetric when given as an int, or ((top, bottom),
    (left, right)); the stride-1 'same' stacks in the discriminator use the
    asymmetric form.
    """
    if layout == "nchw":
        out, cache = _conv_core_forward(_to_nhwc(x), w, b, stride, _pads(padding), need_cache)
        return _to_nchw(out), ("nchw", cache)
    out, cache = _conv_core_forward(x, w, b, stride, _pads(padding), need_cache)
    return out, ("nhwc", cache)


def conv2d_backward(dout, cache):
    layout, core = cache
    if layout == "nchw":
        dx, dw, db = _conv_core_backward(_to_nhwc(dout), core)
        return _to_nchw(dx), dw, db
    return _conv_core_backward(dout, core)


def conv_transpose2d_forward(x, w, b, stride: int = 2, padding: PadSpec = 1,
                             layout: str = "nchw"):
    """Transposed convolution; weights are (Cin, Cout, kh, kw).

    Scatter formulation of the adjoint of ``conv2d_forward``: each input
    position projects through the kernel onto a (kh, kw, Cout) patch of the
    output canvas, so ``conv_transpose2d_forward(g, w)`` equals the conv2d
    input gradient for matched parameters.
    """
    nchw = layout == "nchw"
    if nchw:
        x = _to_nhwc(x)
    N, H, W, Cin = x.shape
    Cw, Cout, kh, kw = w.shape
    if Cin != Cw:
        raise ValueError(f"conv_transpose2d channel mismatch: input {Cin} vs weight {Cw}")
    (pt, pb), (pl, pr) = _pads(padding)
    OH = (H - 1) * stride + kh - pt - pb
    OW = (W - 1) * stride + kw - pl - pr
    w_flat = np.ascontiguousarray(w.transpose(0, 2, 3, 1).reshape(Cin, kh * kw * Cout))
    proj = (x.reshape(N * H * W, Cin) @ w_flat).reshape(N, H, W, kh, kw, Cout)
    canvas = _scatter_windows(proj, N, H, W, kh, kw, Cout,
                              (H - 1) * stride + kh, (W - 1) * stride + kw, stride, x.dtype)
    out = canvas[:, pt:pt + OH, pl:pl + OW, :]
    out = out + b
    _ensure_finite(out, "conv_transpose2d")
    cache = (layout, x, w, stride, (pt, pb, pl, pr))
    if nchw:
        out = _to_nchw(out)
    return out, cache


def conv_transpose2d_backward(dout, cache):
    layout, x, w, stride, (pt, pb, pl, pr) = cache
    nchw = layout == "nchw"
    if nchw:
        dout = _to_nhwc(dout)
    N, H, W, Cin = x.shape
    _, Cout, kh, kw = w.shape
    db = dout.sum(axis=(0, 1, 2), dtype=np.float64).astype(dout.dtype)
    # dL/dx is the matching strided conv of dout with the same kernel
    dx, _ = _conv_core_forward(dout, w, np.zeros(Cin, dtype=dout.dtype),
                               stride, ((pt, pb), (pl, pr)), False)
    # dL/dw pairs every input position with its (kh, kw, Cout) output patch
    dp = np.pad(dout, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    win = sliding_window_view(dp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    dwin = win.transpose(0, 1, 2, 4, 5, 3).reshape(N * H * W, kh * kw * Cout)
    dw = (x.reshape(N * H * W, Cin).T @ dwin).reshape(Cin, kh, kw, Cout).transpose(0, 3, 1, 2)
    dw = np.ascontiguousarray(dw)
    if nchw:
        dx = _to_nchw(dx)
    return dx, dw, db


# ---------------------------------------------------------------------------
# normalization


def _bcast(vec, ndim: int, channel_axis: int):
    shape = [1] * ndim
    shape[channel_axis] = vec.shape[0]
    return vec.reshape(shape)


def batchnorm_forward(x, gamma, beta, running_mean, running_var,
                      momentum: float = 0.1, eps: float = 1e-5, training: bool = True,
                      channel_axis: int = 1):
    """Batch norm over all non-channel axes; population statistics.

    In training mode batch statistics are used and the running buffers are
    updated in place; in eval mode the running buffers normalize.
    """
    axes = tuple(a for a in range(x.ndim) if a != channel_axis % x.ndim)
    if training:
        mean = x.mean(axis=axes, dtype=np.float64)
        var = x.var(axis=axes, dtype=np.float64)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean.astype(running_mean.dtype)
        running_var *= 1.0 - momentum
        running_var += momentum * var.astype(running_var.dtype)
    else:
        mean = running_mean.astype(np.float64)
        var = running_var.astype(np.float64)
    inv_std = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    mean = mean.astype(x.dtype)
    ca = channel_axis % x.ndim
    xhat = (x - _bcast(mean, x.ndim, ca)) * _bcast(inv_std, x.ndim, ca)
    out = _bcast(gamma, x.ndim, ca) * xhat + _bcast(beta, x.ndim, ca)
    _ensure_finite(out, "batchnorm")
    cache = (xhat, gamma, inv_std, training, ca)
    return out, cache


def batchnorm_backward(dout, cache):
    xhat, gamma, inv_std, training, ca = cache
    axes = tuple(a for a in range(dout.ndim) if a != ca)
    dgamma = np.sum(dout * xhat, axis=axes, dtype=np.float64).astype(dout.dtype)
    dbeta = np.sum(dout, axis=axes, dtype=np.float64).astype(dout.dtype)
    g = _bcast(gamma, dout.ndim, ca) * _bcast(inv_std, dout.ndim, ca)
    if not training:
        return dout * g, dgamma, dbeta
    n = dout.size // dout.shape[ca]
    s1 = _bcast(dbeta, dout.ndim, ca)
    s2 = _bcast(dgamma, dout.ndim, ca)
    dx = g * (dout - s1 / n - xhat * (s2 / n))
    return dx, dgamma, dbeta


# ---------------------------------------------------------------------------
# pointwise activations


def relu_forward(x):
    out = np.maximum(x, 0)
    _ensure_finite(out, "relu")
    return out, x > 0


def relu_backward(dout, cache):
    return dout * cache


def leaky_relu_forward(x, alpha: float = 0.2):
    out = np.maximum(x, np.asarray(alpha, dtype=x.dtype) * x)
    _ensure_finite(out, "leaky_relu")
    return out, (x > 0, alpha)


def leaky_relu_backward(dout, cache):
    pos, alpha = cache
    return np.where(pos, dout, np.asarray(alpha, dtype=dout.dtype) * dout)


def tanh_forward(x):
    out = np.tanh(x)
    _ensure_finite(out, "tanh")
    return out, out


def tanh_backward(dout, cache):
    return dout * (1.0 - cache * cache)


def sigmoid_forward(x):
    out = _sigmoid(x)
    _ensure_finite(out, "sigmoid")
    return out, out


def sigmoid_backward(dout, cache):
    return dout * cache * (1.0 - cache)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# dropout


def dropout_forward(x, p: float, rng: np.random.Generator | None = None, active: bool = True):
    """Inverted dropout: keep with probability 1-p, scale kept units by 1/(1-p).

    The mask comes from the caller's RNG stream, so results are bit-repeatable
    for a fixed seed.  With ``active`` False (or p == 0) this is the identity.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout p must be in [0, 1), got {p}")
    if not active or p == 0.0:
        return x, None
    if rng is None:
        raise ValueError("active dropout needs an explicit rng")
    keep = 1.0 - p
    mask = (rng.random(x.shape) < keep).astype(x.dtype)
    mask /= np.asarray(keep, dtype=x.dtype)
    out = x * mask
    return out, mask


def dropout_backward(dout, cache):
    if cache is None:
        return dout
    return dout * cache


# ---------------------------------------------------------------------------
# concat


def concat_forward(xs: list[np.ndarray], axis: int = 1):
    out = np.concatenate(xs, axis=axis)
    sizes = [a.shape[axis] for a in xs]
    return out, (sizes, axis)


def concat_backward(dout, cache):
    sizes, axis = cache
    splits = np.cumsum(sizes)[:-1]
    return np.split(dout, splits, axis=axis)


# ---------------------------------------------------------------------------
# losses


def bce_with_logits(logits, target):
    """Mean sigmoid cross-entropy; target may be a scalar (0 or 1) or array.

    Returns (loss, dlogits); numerically stable for large |logits|.
    """
    t = np.broadcast_to(np.asarray(target, dtype=logits.dtype), logits.shape)
    z = logits
    loss_el = np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))
    loss = float(loss_el.mean(dtype=np.float64))
    dlogits = (_sigmoid(z) - t) / z.size
    return loss, dlogits.astype(logits.dtype)


def l1_loss(pred, target):
    """Mean absolute error over all cells; returns (loss, dpred)."""
    diff = pred - target
    loss = float(np.abs(diff).mean(dtype=np.float64))
    dpred = (np.sign(diff) / diff.size).astype(pred.dtype)
    return loss, dpred


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_init(params: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        t=0,
    )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """In-place bias-corrected Adam update.

    Non-finite gradients refuse the whole step (params and state untouched).
    """
    for k in params:
        if not np.isfinite(grads[k].sum(dtype=np.float64)):
            raise NonFiniteError(f"gradient for {k!r} is non-finite; step refused")
    t = state.t + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for k, p in params.items():
        g = grads[k]
        m = state.m[k]
        v = state.v[k]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= (lr / c1) * m / (np.sqrt(v / c2) + eps)
    state.t = t

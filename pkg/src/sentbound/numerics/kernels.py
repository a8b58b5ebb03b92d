"""Stateless numeric kernels: activations, dense, convolution, pooling."""

import numpy as np

from ..errors import ContractError


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def relu(z):
    return np.maximum(z, 0.0)


_ACTIVATIONS = {
    "identity": lambda z: z,
    "sigmoid": sigmoid,
    "tanh": np.tanh,
    "relu": relu,
}


def activation_fn(name):
    try:
        return _ACTIVATIONS[name]
    except KeyError:
        raise ContractError(f"unknown activation {name!r}") from None


def activation_grad(name, out):
    """Derivative of the named activation expressed through its output."""
    if name == "identity":
        return np.ones_like(out)
    if name == "sigmoid":
        return out * (1.0 - out)
    if name == "tanh":
        return 1.0 - out * out
    if name == "relu":
        return (out > 0.0).astype(out.dtype)
    raise ContractError(f"unknown activation {name!r}")


def dense_forward(x, w, b, activation="identity"):
    """Fully connected layer for a single vector: activation(W^T x + b).

    x: (k,), w: (k, j), b: (j,).
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if w.ndim != 2 or x.shape != (w.shape[0],) or b.shape != (w.shape[1],):
        raise ContractError(
            f"dense_forward shape mismatch: x {x.shape}, w {w.shape}, b {b.shape}"
        )
    return activation_fn(activation)(x @ w + b)


def softmax(z):
    """Row-stochastic softmax with max-subtraction for overflow safety.

    Accepts a single vector (K,) or a matrix (m, K) of row logits.
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ContractError("softmax input must be finite")
    if z.shape[-1] < 2:
        raise ContractError("softmax needs at least 2 classes")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _conv_pad(h_c):
    return h_c // 2


def conv_windows(x, h_c):
    """Stack of flattened length-h_c row windows after zero padding.

    Output row j is rows j-p .. j-p+h_c-1 of x (p = h_c//2), flattened in
    row-major order, so that the window for output j is centred on row j
    (odd h_c) or ends one row past centre (even h_c, surplus dropped).
    """
    m, d = x.shape
    p = _conv_pad(h_c)
    padded = np.zeros((m + 2 * p, d), dtype=np.float64)
    padded[p : p + m] = x
    windows = np.empty((m, h_c * d), dtype=np.float64)
    for k in range(h_c):
        windows[:, k * d : (k + 1) * d] = padded[k : k + m]
    return windows


def conv1d_same_forward(x, filters, bias, activation="relu"):
    """Length-preserving 1-D convolution over the rows of x.

    x: (m, d); filters: (n_f, h_c*d) with each row a flattened window
    filter; bias: (n_f,). Returns (m, n_f).
    """
    x = np.asarray(x, dtype=np.float64)
    filters = np.asarray(filters, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    m, d = x.shape
    n_f, wd = filters.shape
    if wd % d != 0:
        raise ContractError(f"filter width {wd} not a multiple of input dim {d}")
    h_c = wd // d
    if h_c < 1 or m < 1:
        raise ContractError("conv1d requires h_c >= 1 and m >= 1")
    pre = conv_windows(x, h_c) @ filters.T + bias
    return activation_fn(activation)(pre)


def conv1d_backward(d_out_pre, x, filters):
    """Gradients of the convolution given d(loss)/d(pre-activation).

    Returns (d_filters, d_bias, d_x).
    """
    m, d = x.shape
    h_c = filters.shape[1] // d
    p = _conv_pad(h_c)
    windows = conv_windows(x, h_c)
    d_filters = d_out_pre.T @ windows
    d_bias = d_out_pre.sum(axis=0)
    d_windows = d_out_pre @ filters
    d_padded = np.zeros((m + 2 * p, d), dtype=np.float64)
    for k in range(h_c):
        d_padded[k : k + m] += d_windows[:, k * d : (k + 1) * d]
    return d_filters, d_bias, d_padded[p : p + m]


def maxpool1d_same(c, h_m, return_argmax=False):
    """Stride-1 max pooling over time with centred, edge-clipped windows.

    Output row j is the columnwise max of input rows
    j - h_m//2 .. j + ceil(h_m/2) - 1, clipped to [0, m). Output keeps the
    input shape. With return_argmax=True also returns the source row of
    each maximum (first occurrence on ties), needed for the backward pass.
    """
    c = np.asarray(c, dtype=np.float64)
    if h_m < 1:
        raise ContractError("pool window must be >= 1")
    m, n_f = c.shape
    lo_off = h_m // 2
    hi_off = h_m - lo_off  # window is [j - lo_off, j + hi_off)
    out = np.empty_like(c)
    argrow = np.empty((m, n_f), dtype=np.intp)
    cols = np.arange(n_f)
    for j in range(m):
        lo = max(0, j - lo_off)
        hi = min(m, j + hi_off)
        seg = c[lo:hi]
        k = seg.argmax(axis=0)
        out[j] = seg[k, cols]
        argrow[j] = lo + k
    if return_argmax:
        return out, argrow
    return out


def maxpool1d_backward(d_out, argrow):
    """Route pooled gradients back to the argmax rows."""
    m, n_f = d_out.shape
    d_in = np.zeros_like(d_out)
    cols = np.arange(n_f)
    for j in range(m):
        np.add.at(d_in, (argrow[j], cols), d_out[j])
    return d_in


def dropout_apply(h, rate, mode, rng=None, return_mask=False):
    """Inverted dropout: zero entries with probability `rate` in train mode.

    Survivors are scaled by 1/(1-rate) so the expectation is unchanged;
    inference mode is the identity.
    """
    h = np.asarray(h, dtype=np.float64)
    if not 0.0 <= rate < 1.0:
        raise ContractError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "inference" or rate == 0.0:
        mask = np.ones_like(h)
    elif mode == "train":
        if rng is None:
            raise ContractError("train-mode dropout needs an rng")
        keep = rng.random(h.shape) >= rate
        mask = keep.astype(np.float64) / (1.0 - rate)
    else:
        raise ContractError(f"unknown dropout mode {mode!r}")
    out = h * mask
    if return_mask:
        return out, mask
    return out


def glorot_init(rows, cols, rng):
    """Gaussian init with variance 2/(rows+cols)."""
    if rows < 1 or cols < 1:
        raise ContractError("glorot_init needs rows, cols >= 1")
    std = np.sqrt(2.0 / (rows + cols))
    return rng.normal(0.0, std, size=(rows, cols))

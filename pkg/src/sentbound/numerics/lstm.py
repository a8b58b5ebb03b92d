"""LSTM cell, fused sequence passes, and the bidirectional layer.

A direction's weights live in a plain dict with per-gate matrices in the
conventional orientation (rows = units):

    wx_i, wx_f, wx_o, wx_g : (n_r, d_in)   input weights per gate
    wh_i, wh_f, wh_o, wh_g : (n_r, n_r)    recurrent weights per gate
    b_i,  b_f,  b_o,  b_g  : (n_r,)        gate biases
    wy                     : (n_r, n_r)    per-timestep output projection
    by                     : (n_r,)

The cell has no peephole connections; the candidate gate uses tanh and
the i/f/o gates use the logistic sigmoid. Bidirectionality is realised
by running a second, independently parameterised pass over the reversed
sequence and summing the two projected output sequences.
"""

import numpy as np

from .kernels import sigmoid

GATES = ("i", "f", "o", "g")


def lstm_cell_step(x_t, h_prev, c_prev, weights):
    """One LSTM step. Returns (h_t, c_t)."""
    i = sigmoid(weights["wx_i"] @ x_t + weights["wh_i"] @ h_prev + weights["b_i"])
    f = sigmoid(weights["wx_f"] @ x_t + weights["wh_f"] @ h_prev + weights["b_f"])
    o = sigmoid(weights["wx_o"] @ x_t + weights["wh_o"] @ h_prev + weights["b_o"])
    g = np.tanh(weights["wx_g"] @ x_t + weights["wh_g"] @ h_prev + weights["b_g"])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def fuse_gate_weights(weights):
    """Stack the four per-gate parameter blocks for one-GEMM-per-step math."""
    wx = np.concatenate([weights[f"wx_{g}"] for g in GATES], axis=0)
    wh = np.concatenate([weights[f"wh_{g}"] for g in GATES], axis=0)
    b = np.concatenate([weights[f"b_{g}"] for g in GATES])
    return wx, wh, b


def lstm_sequence_forward(x, wx, wh, b):
    """Run a fused-gate LSTM over the rows of x (zero initial state).

    x: (m, d_in); wx: (4n, d_in); wh: (4n, n); b: (4n,).
    Returns (h_seq, cache) where h_seq is (m, n).
    """
    m = x.shape[0]
    n = wh.shape[1]
    zx = x @ wx.T + b  # input projections for every step at once
    gi = np.empty((m, n))
    gf = np.empty((m, n))
    go = np.empty((m, n))
    gg = np.empty((m, n))
    cs = np.empty((m, n))
    tc = np.empty((m, n))
    hs = np.empty((m, n))
    h = np.zeros(n)
    c = np.zeros(n)
    for t in range(m):
        z = zx[t] + wh @ h
        sig = sigmoid(z[: 3 * n])
        i_t = sig[:n]
        f_t = sig[n : 2 * n]
        o_t = sig[2 * n :]
        g_t = np.tanh(z[3 * n :])
        c = f_t * c + i_t * g_t
        t_c = np.tanh(c)
        h = o_t * t_c
        gi[t] = i_t
        gf[t] = f_t
        go[t] = o_t
        gg[t] = g_t
        cs[t] = c
        tc[t] = t_c
        hs[t] = h
    cache = {"x": x, "i": gi, "f": gf, "o": go, "g": gg, "c": cs, "tanh_c": tc, "h": hs}
    return hs, cache


def lstm_sequence_backward(d_h_seq, cache, wx, wh):
    """Backpropagation through time for lstm_sequence_forward.

    d_h_seq: (m, n) gradient w.r.t. every hidden output row.
    Returns (d_wx, d_wh, d_b, d_x).
    """
    x = cache["x"]
    gi, gf, go, gg = cache["i"], cache["f"], cache["o"], cache["g"]
    cs, tc, hs = cache["c"], cache["tanh_c"], cache["h"]
    m, n = d_h_seq.shape
    dz_seq = np.empty((m, 4 * n))
    dh = np.zeros(n)
    dc = np.zeros(n)
    for t in range(m - 1, -1, -1):
        dh = dh + d_h_seq[t]
        i_t, f_t, o_t, g_t = gi[t], gf[t], go[t], gg[t]
        t_c = tc[t]
        do = dh * t_c
        dc = dc + dh * o_t * (1.0 - t_c * t_c)
        c_prev = cs[t - 1] if t > 0 else 0.0
        dz = dz_seq[t]
        dz[:n] = dc * g_t * i_t * (1.0 - i_t)
        dz[n : 2 * n] = dc * c_prev * f_t * (1.0 - f_t)
        dz[2 * n : 3 * n] = do * o_t * (1.0 - o_t)
        dz[3 * n :] = dc * i_t * (1.0 - g_t * g_t)
        dh = wh.T @ dz
        dc = dc * f_t
    h_prev = np.zeros_like(hs)
    h_prev[1:] = hs[:-1]
    d_wx = dz_seq.T @ x
    d_wh = dz_seq.T @ h_prev
    d_b = dz_seq.sum(axis=0)
    d_x = dz_seq @ wx
    return d_wx, d_wh, d_b, d_x


def direction_forward(x, weights):
    """One direction of the bidirectional layer: LSTM plus output projection.

    Returns (y_seq, cache); y_t = wy @ h_t + by (identity activation).
    """
    wx, wh, b = fuse_gate_weights(weights)
    h_seq, cache = lstm_sequence_forward(x, wx, wh, b)
    y_seq = h_seq @ weights["wy"].T + weights["by"]
    cache["fused"] = (wx, wh)
    return y_seq, cache


def direction_backward(d_y_seq, cache, weights):
    """Gradients for direction_forward.

    Returns (grads, d_x) with grads keyed like the weights dict.
    """
    h_seq = cache["h"]
    d_wy = d_y_seq.T @ h_seq
    d_by = d_y_seq.sum(axis=0)
    d_h_seq = d_y_seq @ weights["wy"]
    wx, wh = cache["fused"]
    d_wx, d_wh, d_b, d_x = lstm_sequence_backward(d_h_seq, cache, wx, wh)
    n = h_seq.shape[1]
    grads = {"wy": d_wy, "by": d_by}
    for k, gate in enumerate(GATES):
        grads[f"wx_{gate}"] = d_wx[k * n : (k + 1) * n]
        grads[f"wh_{gate}"] = d_wh[k * n : (k + 1) * n]
        grads[f"b_{gate}"] = d_b[k * n : (k + 1) * n]
    return grads, d_x


def bilstm_forward(x, fwd_weights, bwd_weights):
    """Bidirectional pass: forward over x, backward over reversed x.

    The backward direction's outputs are re-reversed and the two projected
    sequences are summed elementwise, preserving the m rows of x.
    """
    y_f, _ = direction_forward(x, fwd_weights)
    y_b, _ = direction_forward(x[::-1], bwd_weights)
    return y_f + y_b[::-1]

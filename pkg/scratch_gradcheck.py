"""Scratch: finite-difference check of the full network, all variants."""

import numpy as np

from sentbound.numerics import NetConfig, NetInput, SequenceNet
from sentbound.numerics.loss import weighted_cross_entropy


def loss_only(net, params, inp, labels01, cw, mask):
    probs, _ = net.forward(params, inp, mode="inference")
    y_true = np.zeros_like(probs)
    y_true[np.arange(len(labels01)), labels01] = 1.0
    loss, _ = weighted_cross_entropy(y_true, probs, cw, mask)
    return loss


def check(variant, seed=7, m=9):
    rng = np.random.default_rng(seed)
    cfg = NetConfig(
        variant=variant,
        conv_filters=4,
        conv_width=3,
        pool_width=3,
        rec_units=5,
        hidden_units=6,
        dropout=0.0,
        word_vocab=7,
        word_dim=4,
        tag_vocab=3,
        tag_dim=2,
    )
    net = SequenceNet(cfg)
    params = net.init_params(rng)
    inp = NetInput(
        word_ids=rng.integers(0, 7, size=m),
        tag_ids=rng.integers(0, 3, size=m),
    )
    labels01 = rng.integers(0, 2, size=m)
    labels01[0] = 1
    labels01[1] = 0
    mask = np.ones(m, dtype=bool)
    mask[m // 2] = False  # one inactive position
    cw = np.array([0.7, 5.0])

    loss, grads, _ = net.loss_and_grads(
        params, inp, labels01, cw, mask=mask, mode="inference"
    )
    step = 1e-5
    worst = 0.0
    worst_name = None
    for name, p in params.items():
        g = grads[name]
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            lp = loss_only(net, params, inp, labels01, cw, mask)
            p[idx] = orig - step
            lm = loss_only(net, params, inp, labels01, cw, mask)
            p[idx] = orig
            fd = (lp - lm) / (2 * step)
            rel = abs(g[idx] - fd) / max(abs(g[idx]), abs(fd), 1e-8)
            if rel > worst:
                worst = rel
                worst_name = (name, idx, g[idx], fd)
    print(f"{variant:5s} loss={loss:.6f} worst rel err = {worst:.3e} at {worst_name}")
    return worst


if __name__ == "__main__":
    bad = False
    for variant in ("rcnn", "cnn", "rnn", "mlp"):
        if check(variant) > 1e-4:
            bad = True
    print("FAIL" if bad else "ALL OK")

"""Training orchestration: class weights, buckets, folds, and the epoch loop.

Batches are drawn inside length buckets and padded to the batch maximum
with masked rows; the update step slices every sequence back to its
active prefix before any arithmetic, so padding can never change a
result. Gradients are averaged over the active positions of the batch
and applied with RMSProp. All shuffling, initialisation, and dropout
randomness flows from one generator, so a fixed seed reproduces the loss
trace and the final parameters bit for bit.
"""

import time
from dataclasses import dataclass

import numpy as np

from .corpus import LABEL_B, LABEL_NB
from .errors import ContractError, NumericError
from .features import LexicalEncoder, ProsodicEncoder
from .model import ModelBundle, fuse, lexical_config, prosodic_config
from .numerics import RmsPropState, SequenceNet, rmsprop_step

RMSPROP_EPSILON = 1e-8
DEFAULT_ALPHA_GRID = tuple(round(i / 10, 1) for i in range(11))


def compute_class_weights(labels):
    """Inverse-frequency class weights: cw = |y| / (2 |y = class|).

    Returns an array indexed like the probability columns:
    [cw_NB, cw_B]. Both classes must be present.
    """
    n_b = sum(1 for lab in labels if lab == LABEL_B)
    n_nb = sum(1 for lab in labels if lab == LABEL_NB)
    if n_b + n_nb != len(labels):
        raise ContractError("labels must be B or NB")
    if n_b == 0 or n_nb == 0:
        raise ContractError(
            f"degenerate training set: {n_b} boundary and {n_nb} non-boundary labels"
        )
    total = n_b + n_nb
    return np.array([total / (2.0 * n_nb), total / (2.0 * n_b)])


# ---------------------------------------------------------------- bucketing


@dataclass
class Bucket:
    ids: list
    max_len: int


def make_buckets(texts, bucket_width):
    """Group texts into token-length ranges of the given width.

    Bucket k holds lengths in [k*width + 1, (k+1)*width]; empty ranges
    are dropped. Each text lands in exactly one bucket.
    """
    if not texts:
        raise ContractError("no texts to bucket")
    if bucket_width < 1:
        raise ContractError("bucket width must be >= 1")
    groups = {}
    for text in texts:
        groups.setdefault((len(text) - 1) // bucket_width, []).append(text)
    buckets = []
    for key in sorted(groups):
        members = groups[key]
        buckets.append(
            Bucket(ids=[t.id for t in members], max_len=max(len(t) for t in members))
        )
    return buckets


# -------------------------------------------------------------------- folds


@dataclass
class FoldPlan:
    k: int
    assignments: dict  # text id -> fold index

    def test_ids(self, fold):
        return [tid for tid, f in self.assignments.items() if f == fold]

    def train_ids(self, fold):
        return [tid for tid, f in self.assignments.items() if f != fold]


def kfold_split(corpus, k, seed):
    """Shuffled round-robin fold assignment; fold sizes differ by <= 1."""
    ids = sorted(t.id for t in corpus)
    if len(ids) < k:
        raise ContractError(f"cannot make {k} folds from {len(ids)} texts")
    if k < 2:
        raise ContractError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    assignments = {tid: i % k for i, tid in enumerate(order)}
    return FoldPlan(k=k, assignments=assignments)


# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    bucket_width: int = 50
    seed: int = 0
    alpha_grid: tuple = DEFAULT_ALPHA_GRID

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.bucket_width < 1:
            raise ContractError("epochs, batch_size, bucket_width must be positive")
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            raise ContractError("alpha grid values must lie in [0, 1]")


# ------------------------------------------------------------ batch updates


def pad_item(inp, target_len):
    """Pad a network input with inactive rows up to target_len.

    Returns (padded_input, mask). Padding rows use id 0 / zero features /
    label 0 and are flagged inactive; the update step never touches them.
    """
    m = len(inp)
    if target_len < m:
        raise ContractError("cannot pad to a shorter length")
    pad = target_len - m

    def pad_ids(a):
        return None if a is None else np.concatenate([a, np.zeros(pad, dtype=a.dtype)])

    def pad_dense(a):
        if a is None:
            return None
        return np.concatenate([a, np.zeros((pad, a.shape[1]))], axis=0)

    padded = type(inp)(
        word_ids=pad_ids(inp.word_ids),
        tag_ids=pad_ids(inp.tag_ids),
        dense=pad_dense(inp.dense),
        label01=pad_ids(inp.label01),
    )
    mask = np.zeros(target_len, dtype=bool)
    mask[:m] = True
    return padded, mask


def active_prefix_length(mask):
    """Length of the live prefix of a padding mask (padding is trailing)."""
    active = np.flatnonzero(mask)
    return 0 if len(active) == 0 else int(active[-1]) + 1


def batch_loss_and_grads(net, params, items, class_weights, mode="train", rng=None):
    """Summed loss and gradients over a batch of (input, mask) pairs.

    Each sequence is sliced back to its active prefix before the forward
    pass, so trailing padded rows are bit-for-bit inert.
    """
    total_loss = 0.0
    total_active = 0
    acc = None
    for inp, mask in items:
        if mask is None:
            sliced, sub_mask = inp, None
        else:
            length = active_prefix_length(mask)
            if length == 0:
                continue
            sliced = inp.sliced(length)
            sub_mask = np.asarray(mask, dtype=bool)[:length]
        loss, grads, n_active = net.loss_and_grads(
            params, sliced, sliced.label01, class_weights,
            mask=sub_mask, mode=mode, rng=rng,
        )
        total_loss += loss
        total_active += n_active
        if acc is None:
            acc = grads
        else:
            for name in acc:
                acc[name] += grads[name]
    if acc is None:
        raise ContractError("batch has no active positions")
    return total_loss, acc, total_active


# ----------------------------------------------------------- bundle factory


def make_lexical_bundle(variant, hp, word_table, tag_table, rng):
    """Initialise a lexical model; table vectors become the starting params."""
    cfg = lexical_config(
        variant,
        hp,
        word_table.vectors.shape[0] if word_table is not None else 0,
        tag_table.vectors.shape[0] if tag_table is not None else 0,
    )
    net = SequenceNet(cfg)
    params = net.init_params(rng)
    bundle = ModelBundle(net, params, hp)
    if word_table is not None:
        params["emb_word"][...] = word_table.vectors
        bundle.word_tokens = word_table.sorted_tokens()
    if tag_table is not None:
        params["emb_tag"][...] = tag_table.vectors
        bundle.tag_tokens = tag_table.sorted_tokens()
    return bundle


def make_prosodic_bundle(variant, hp, rng):
    net = SequenceNet(prosodic_config(variant, hp))
    return ModelBundle(net, net.init_params(rng), hp)


# ----------------------------------------------------------------- training


def _param_norms(params):
    return {name: float(np.linalg.norm(v)) for name, v in params.items()}


def train_model(bundle, train_texts, encoder, config, rng,
                model_kind="lexical", log=None):
    """Run the bucketed epoch loop on an initialised bundle.

    AD-group texts are admitted only when training the lexical model.
    Returns (bundle, trace) where trace is the per-epoch mean loss over
    active positions. `log`, when given, receives
    (epoch, mean_loss, elapsed_ms) after every epoch.
    """
    if model_kind not in ("lexical", "prosodic"):
        raise ContractError(f"unknown model kind {model_kind!r}")
    texts = list(train_texts)
    if model_kind == "prosodic":
        texts = [t for t in texts if t.group != "AD"]
    if not texts:
        raise ContractError("no training texts after group filtering")
    class_weights = compute_class_weights(
        [lab for t in texts for lab in t.labels]
    )
    encoded = {t.id: encoder.encode(t) for t in texts}
    buckets = make_buckets(texts, config.bucket_width)
    state = RmsPropState(
        bundle.params, gamma=bundle.hyperparams.gamma,
        eta=bundle.hyperparams.eta, epsilon=RMSPROP_EPSILON,
    )
    trace = []
    for epoch in range(config.epochs):
        started = time.perf_counter()
        batches = []
        for bucket in buckets:
            order = [bucket.ids[i] for i in rng.permutation(len(bucket.ids))]
            for i in range(0, len(order), config.batch_size):
                batches.append(order[i : i + config.batch_size])
        batch_order = rng.permutation(len(batches))
        epoch_loss = 0.0
        epoch_active = 0
        for step, b in enumerate(batch_order):
            chunk = [encoded[tid] for tid in batches[b]]
            target = max(len(item) for item in chunk)
            items = [pad_item(item, target) for item in chunk]
            loss, grads, n_active = batch_loss_and_grads(
                bundle.net, bundle.params, items, class_weights,
                mode="train", rng=rng,
            )
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch} batch {step}; "
                    f"parameter norms: {_param_norms(bundle.params)}"
                )
            scale = 1.0 / n_active
            for name in grads:
                grads[name] *= scale
            rmsprop_step(bundle.params, grads, state)
            epoch_loss += loss
            epoch_active += n_active
        mean_loss = epoch_loss / epoch_active
        trace.append(mean_loss)
        if log is not None:
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            log(epoch, mean_loss, elapsed_ms)
    return bundle, trace


# --------------------------------------------------------------- alpha grid


def _f1_from_counts(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 2.0 * p * r / (p + r) if p + r else 0.0


def tune_alpha_from_probs(lex_probs, pros_probs, gold_labels, alpha_grid):
    """Grid value maximising boundary F1; exact ties go to the larger alpha."""
    if not alpha_grid:
        raise ContractError("alpha grid is empty")
    grid = sorted(alpha_grid)
    best_alpha, best_f1 = None, -1.0
    for alpha in grid:
        tp = fp = fn = 0
        for p_lex, p_pros, gold in zip(lex_probs, pros_probs, gold_labels):
            pred, _ = fuse(p_lex, p_pros, alpha)
            for g, p in zip(gold, pred):
                if g == LABEL_B and p == LABEL_B:
                    tp += 1
                elif g != LABEL_B and p == LABEL_B:
                    fp += 1
                elif g == LABEL_B:
                    fn += 1
        f1 = _f1_from_counts(tp, fp, fn)
        if f1 >= best_f1:
            best_alpha, best_f1 = alpha, f1
    return best_alpha


def tune_alpha(lexical, prosodic, prosody_stats, validation_texts,
               alpha_grid=DEFAULT_ALPHA_GRID):
    """Tune the fusion weight on labelled validation texts with prosody."""
    lex_enc = LexicalEncoder(lexical.word_table(), lexical.tag_table())
    pros_enc = ProsodicEncoder(prosody_stats)
    lex_probs, pros_probs, gold = [], [], []
    for text in validation_texts:
        p, _ = lexical.net.forward(lexical.params, lex_enc.encode(text))
        q, _ = prosodic.net.forward(prosodic.params, pros_enc.encode(text))
        lex_probs.append(p)
        pros_probs.append(q)
        gold.append(text.labels)
    return tune_alpha_from_probs(lex_probs, pros_probs, gold, alpha_grid)

"""Shared fixtures: synthetic corpora and cached cross-validation runs."""

import numpy as np
import pytest

from sentbound.corpus import SynthSpec, synth_generate
from sentbound.evaluation import EvalConfig, cross_validated_eval
from sentbound.model import Hyperparams
from sentbound.training import TrainConfig

# The corpus the acceptance gate trains on: 60 texts, mean sentence
# length 13, a 95%-reliable cue word, and a 2-sigma pause cue.
ACCEPT_SPEC = SynthSpec(
    n_texts=60,
    mean_sentence_len=13.0,
    boundary_cue_token="então",
    cue_reliability=0.95,
    prosody_cue_strength=2.0,
    vocab_size=50,
    seed=7,
    name="synth-base",
)


@pytest.fixture(scope="session")
def base_corpus():
    return synth_generate(ACCEPT_SPEC)


@pytest.fixture(scope="session")
def offset2_corpus():
    spec = SynthSpec(
        n_texts=60,
        mean_sentence_len=13.0,
        boundary_cue_token="então",
        cue_reliability=0.95,
        prosody_cue_strength=2.0,
        vocab_size=50,
        seed=7,
        cue_offset=2,
        name="synth-off2",
    )
    return synth_generate(spec)


@pytest.fixture(scope="session")
def genre_b_corpus():
    spec = SynthSpec(
        n_texts=60,
        mean_sentence_len=13.0,
        boundary_cue_token="aí",
        cue_reliability=0.95,
        prosody_cue_strength=2.0,
        vocab_size=50,
        seed=11,
        name="synth-genre-b",
    )
    return synth_generate(spec)


def reduced_config(seed, epochs=20, batch_size=8, folds=5, alpha=None):
    """The acceptance-scale configuration: n_f = 16, n_r = 16."""
    return EvalConfig(
        train=TrainConfig(epochs=epochs, batch_size=batch_size, seed=seed),
        lexical_hp=Hyperparams.lexical(conv_filters=16, rec_units=16),
        prosodic_hp=Hyperparams.prosodic(conv_filters=16, rec_units=16),
        folds=folds,
        alpha=alpha,
    )


@pytest.fixture(scope="session")
def run_cv():
    """Memoised cross-validated runs shared across test modules."""
    cache = {}

    def run(corpus, variant, features, seed, **kwargs):
        key = (corpus.name, variant, features, seed, tuple(sorted(kwargs.items())))
        if key not in cache:
            cache[key] = cross_validated_eval(
                corpus, variant, features, reduced_config(seed, **kwargs)
            )
        return cache[key]

    return run


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

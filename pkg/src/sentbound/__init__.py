"""Sentence boundary detection for speech transcripts.

A numpy library that trains small recurrent-convolutional sequence
labellers on lexical (word + PoS embeddings) and prosodic (pitch,
intensity, duration, pause) inputs, fuses their per-word boundary
probabilities, and evaluates boundary F1 under cross-validation.
"""

__version__ = "0.1.0"

from . import corpus, evaluation, features, model, numerics, training
from .errors import (
    ContractError,
    ModelFileError,
    NumericError,
    ParseError,
    SentboundError,
)

__all__ = [
    "corpus",
    "features",
    "model",
    "numerics",
    "training",
    "evaluation",
    "ContractError",
    "ModelFileError",
    "NumericError",
    "ParseError",
    "SentboundError",
]

"""Dense numeric kernels, neural layers with analytic gradients, and RMSProp.

All arrays are float64 numpy arrays. A "matrix" is a 2-D row-major array;
sequence data is laid out one timestep per row. No deep-learning framework
is used anywhere: every gradient in this package is derived by hand and
checked against finite differences in the test suite.
"""

from .kernels import (
    dense_forward,
    softmax,
    conv1d_same_forward,
    maxpool1d_same,
    dropout_apply,
    glorot_init,
)
from .lstm import lstm_cell_step, bilstm_forward
from .loss import weighted_cross_entropy
from .optim import RmsPropState, rmsprop_step
from .network import NetConfig, NetInput, SequenceNet

__all__ = [
    "dense_forward",
    "softmax",
    "conv1d_same_forward",
    "maxpool1d_same",
    "dropout_apply",
    "glorot_init",
    "lstm_cell_step",
    "bilstm_forward",
    "weighted_cross_entropy",
    "RmsPropState",
    "rmsprop_step",
    "NetConfig",
    "NetInput",
    "SequenceNet",
]

"""Learning core: from-scratch LSTM with manual backpropagation through
time, Adam, and the two output heads used for static and time-dependent
Hamiltonian targets."""

from .kernels import BACKEND
from .losses import (UndefinedSimilarityError, cosine_similarity,
                     cosine_similarity_batch, mse_loss)
from .lstm import LstmCellParams, lstm_cell_forward, lstm_forward
from .network import (MODE_STATIC, MODE_TIMEDEP, NetworkArch, init_params,
                      network_backward, network_forward, predict)
from .optim import AdamState, adam_step, init_adam
from .training import (TrainConfig, TrainResult, arch_for_data,
                       load_checkpoint, save_checkpoint, train)

__all__ = [
    "BACKEND",
    "UndefinedSimilarityError",
    "cosine_similarity",
    "cosine_similarity_batch",
    "mse_loss",
    "LstmCellParams",
    "lstm_cell_forward",
    "lstm_forward",
    "MODE_STATIC",
    "MODE_TIMEDEP",
    "NetworkArch",
    "init_params",
    "network_backward",
    "network_forward",
    "predict",
    "AdamState",
    "adam_step",
    "init_adam",
    "TrainConfig",
    "TrainResult",
    "arch_for_data",
    "load_checkpoint",
    "save_checkpoint",
    "train",
]

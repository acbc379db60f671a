"""hamlearn: recover spin-chain Hamiltonian parameters from temporal
records of single-qubit measurements with a from-scratch LSTM."""

__version__ = "0.1.0"

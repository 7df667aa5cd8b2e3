"""Fault-diagnosis workbench: simulated vacuum robot, synthetic diagnostic
sessions, an LSTM next-step predictor, and transfer-of-control evaluation."""

__version__ = "0.1.0"

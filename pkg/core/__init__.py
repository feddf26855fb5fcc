"""
Dense-tensor substrate: parameters, operators, gradient checking, the
Adam optimizer and the VPN1 checkpoint format.
"""

from core.parameters import Parameter, ParameterSet
from core.chain import Chain
from core.optimizer import Adam, optimizer_step
from core.checkpoint import load_checkpoint, read_checkpoint, save_checkpoint

__all__ = [
    "Adam",
    "Chain",
    "Parameter",
    "ParameterSet",
    "load_checkpoint",
    "optimizer_step",
    "read_checkpoint",
    "save_checkpoint",
]

"""Reverse-mode tensor engine, optimizer and verification tools."""

from .checkpoint import DigestMismatchError, config_digest, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check
from .optim import Adam, adam_step
from .params import Parameter, ParameterStore, uniform_fan_in
from .rng import make_rng, split_streams
from .tensor import (
    NonFiniteError,
    NotScalarError,
    ShapeMismatchError,
    Tensor,
    add,
    backward,
    broadcast_to,
    concat,
    div,
    dropout,
    elu,
    exp,
    gather_rows,
    gelu,
    layer_norm,
    leaky_relu,
    log,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    segment_sum,
    set_default_dtype,
    set_finite_check,
    sigmoid,
    softmax,
    softplus,
    sub,
    sum_,
    tanh,
    transpose,
)

__all__ = [
    "Adam",
    "DigestMismatchError",
    "GradCheckReport",
    "NonFiniteError",
    "NotScalarError",
    "Parameter",
    "ParameterStore",
    "ShapeMismatchError",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "broadcast_to",
    "concat",
    "config_digest",
    "div",
    "dropout",
    "elu",
    "exp",
    "gather_rows",
    "gelu",
    "grad_check",
    "layer_norm",
    "leaky_relu",
    "load_checkpoint",
    "log",
    "make_rng",
    "matmul",
    "mean",
    "mul",
    "neg",
    "relu",
    "reshape",
    "save_checkpoint",
    "segment_sum",
    "set_default_dtype",
    "set_finite_check",
    "sigmoid",
    "softmax",
    "softplus",
    "split_streams",
    "sub",
    "sum_",
    "tanh",
    "transpose",
    "uniform_fan_in",
]

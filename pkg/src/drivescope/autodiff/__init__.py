from .tensor import (Tensor, NumericsError, backward, grad_of, no_grad,
                     add, mul, sub, div, matmul,
                     relu, gelu, sigmoid, tanh, softmax, layernorm, conv2d,
                     maxpool2d, avgpool2d, mean, tsum, concat, reshape, transpose,
                     embedding, linear, square, sqrt)
from .check import check_gradients
from .checkpoint import save_checkpoint_file, load_checkpoint_file

__all__ = [
    "Tensor", "NumericsError", "backward", "grad_of", "no_grad",
    "add", "mul", "sub", "div", "matmul", "relu", "gelu", "sigmoid", "tanh",
    "softmax", "layernorm", "conv2d", "maxpool2d", "avgpool2d", "mean", "tsum",
    "concat", "reshape", "transpose", "embedding", "linear", "square", "sqrt",
    "check_gradients", "save_checkpoint_file", "load_checkpoint_file",
]

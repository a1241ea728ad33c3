from .function import Function
from .parameter import AdamState, Parameter
from .tensor import Tensor

__all__ = [
    "AdamState",
    "Function",
    "Parameter",
    "Tensor",
]

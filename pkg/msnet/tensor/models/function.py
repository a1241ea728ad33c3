from abc import ABC, abstractmethod
from typing import Any, Optional

import numpy as np

from msnet.tensor.models.tensor import Tensor


class Function(ABC):
    """
    A recorded differentiable operation.

    ``forward`` receives the raw arrays of the input tensors; ``backward``
    receives dL/d(output) and returns dL/d(input) for every input, with
    ``None`` for inputs that do not require a gradient.
    """

    def __init__(self, *tensors: Tensor):
        self.inputs = tensors
        self.needs_grad = tuple(t.requires_grad for t in tensors)

    @abstractmethod
    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    @abstractmethod
    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *tensors: Tensor, **kwargs: Any) -> Tensor:
        func = cls(*tensors)
        out = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = any(func.needs_grad)
        return Tensor(out, requires_grad=requires_grad, creator=func if requires_grad else None)

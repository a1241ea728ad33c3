from typing import Optional, Sequence, Union

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.tensor.exceptions import TensorExceptionEnum

ArrayLike = Union[np.ndarray, float, int, Sequence]


class Tensor:
    """
    Dense float64 array plus the bookkeeping reverse-mode autodiff needs.

    A tensor created by an op keeps a reference to the op (``creator``) when
    any of the op's inputs requires a gradient; leaves have no creator.
    """

    __slots__ = ("data", "requires_grad", "creator")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Optional["Function"] = None,  # noqa: F821
    ):
        array = np.array(data, dtype=np.float64)
        if any(dim <= 0 for dim in array.shape):
            raise CustomException(TensorExceptionEnum.EMPTY_SHAPE, shape=array.shape)
        self.data = array
        self.requires_grad = requires_grad
        self.creator = creator

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(()))

    def __repr__(self):
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{grad})"

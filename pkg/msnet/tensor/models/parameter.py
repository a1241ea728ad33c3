from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.tensor.exceptions import TensorExceptionEnum
from msnet.tensor.models.tensor import Tensor


class Parameter:
    """Named tensor with a trainable flag; the flag is the freeze mask."""

    __slots__ = ("name", "value")

    def __init__(self, name: str, value: Tensor | np.ndarray, trainable: bool = True):
        self.name = name
        self.value = value if isinstance(value, Tensor) else Tensor(value)
        self.value.requires_grad = trainable

    @property
    def trainable(self) -> bool:
        return self.value.requires_grad

    @trainable.setter
    def trainable(self, flag: bool) -> None:
        self.value.requires_grad = bool(flag)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def initial(cls, parameters: Iterable[Parameter]) -> "AdamState":
        state = cls()
        for param in parameters:
            if param.name in state.m:
                raise CustomException(
                    TensorExceptionEnum.DUPLICATE_PARAMETER, name=param.name
                )
            state.m[param.name] = np.zeros(param.shape)
            state.v[param.name] = np.zeros(param.shape)
        return state

from typing import Callable, Iterable

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.tensor.exceptions import TensorExceptionEnum
from msnet.tensor.models import Parameter, Tensor


class AutogradService:
    @classmethod
    def backward(
        cls, loss: Tensor, parameters: Iterable[Parameter]
    ) -> dict[str, np.ndarray]:
        """
        Reverse-mode sweep from a scalar loss.

        Args:
            loss: scalar tensor produced by recorded ops
            parameters: candidate parameters; frozen ones are skipped

        Returns:
            dict[str, np.ndarray]: gradient per trainable parameter reachable
            from ``loss``
        """
        if loss.size != 1:
            raise CustomException(TensorExceptionEnum.NOT_SCALAR, shape=loss.shape)

        trainable = [p for p in parameters if p.trainable]
        if not loss.requires_grad or not trainable:
            return {}

        grads: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
        for node in reversed(cls._topological_order(loss)):
            grad = grads.get(id(node))
            if grad is None or node.creator is None:
                continue
            input_grads = node.creator.backward(grad)
            for tensor, input_grad in zip(node.creator.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = input_grad if key not in grads else grads[key] + input_grad

        return {
            p.name: np.array(grads[id(p.value)]) for p in trainable if id(p.value) in grads
        }

    @classmethod
    def numerical_gradient(
        cls,
        loss_fn: Callable[[], float],
        parameter: Parameter,
        index: tuple[int, ...],
        h: float = 1e-5,
    ) -> float:
        """Central difference of ``loss_fn`` w.r.t. one parameter element."""
        data = parameter.value.data
        original = data[index]
        try:
            data[index] = original + h
            upper = loss_fn()
            data[index] = original - h
            lower = loss_fn()
        finally:
            data[index] = original
        return (upper - lower) / (2 * h)

    @staticmethod
    def _topological_order(root: Tensor) -> list[Tensor]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node.creator is not None:
                for parent in node.creator.inputs:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

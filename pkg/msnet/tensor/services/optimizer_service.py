from typing import Iterable, Mapping

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.tensor.exceptions import TensorExceptionEnum
from msnet.tensor.models import AdamState, Parameter

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class OptimizerService:
    @classmethod
    def adam_step(
        cls,
        parameters: Iterable[Parameter],
        grads: Mapping[str, np.ndarray],
        state: AdamState,
        lr: float,
    ) -> AdamState:
        """
        One bias-corrected Adam update, in place.

        Frozen parameters are never written, whatever ``grads`` holds for them.
        A trainable parameter without an entry in ``grads`` sees a zero gradient.
        """
        by_name = {p.name: p for p in parameters}
        for name in grads:
            if name not in by_name:
                raise CustomException(TensorExceptionEnum.UNKNOWN_GRADIENT, name=name)

        state.t += 1
        bc1 = 1.0 - BETA1**state.t
        bc2 = 1.0 - BETA2**state.t

        for name, param in by_name.items():
            if not param.trainable:
                continue
            g = grads.get(name)
            if g is None:
                g = np.zeros(param.shape)
            elif g.shape != param.shape:
                raise CustomException(
                    TensorExceptionEnum.SHAPE_MISMATCH,
                    op="adam_step",
                    detail=f"{name}: gradient {g.shape} vs parameter {param.shape}",
                )
            if name not in state.m:
                state.m[name] = np.zeros(param.shape)
                state.v[name] = np.zeros(param.shape)

            m = state.m[name]
            v = state.v[name]
            m *= BETA1
            m += (1.0 - BETA1) * g
            v *= BETA2
            v += (1.0 - BETA2) * (g * g)

            m_hat = m / bc1
            v_hat = v / bc2
            param.value.data -= lr * m_hat / (np.sqrt(v_hat) + EPSILON)

        logger.trace(f"adam step t={state.t} lr={lr}")
        return state

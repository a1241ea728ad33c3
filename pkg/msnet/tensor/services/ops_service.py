from typing import Sequence

import numpy as np

from common.exceptions.custom_exceptions import CustomException
from msnet.tensor.exceptions import TensorExceptionEnum
from msnet.tensor.models import Function, Tensor

PROB_FLOOR = 1e-12


def _as_batch(x: np.ndarray, ndim: int) -> tuple[np.ndarray, bool]:
    """Add a leading batch axis when ``x`` has the unbatched rank."""
    if x.ndim == ndim:
        return x[None], False
    return x, True


class _Conv2d(Function):
    # 3x3 kernel, stride 1, zero padding 1
    def forward(self, x, kernel, bias):
        x, self.batched = _as_batch(x, 3)
        n, c, h, w = x.shape
        o = kernel.shape[0]
        padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))

        # bias first, then channel, dx, dy: the accumulation order of a direct loop
        out = np.broadcast_to(bias[None, :, None, None], (n, o, h, w)).astype(np.float64)
        for ci in range(c):
            for dx in range(3):
                for dy in range(3):
                    out += (
                        kernel[None, :, ci, dy, dx, None, None]
                        * padded[:, None, ci, dy : dy + h, dx : dx + w]
                    )

        self.kernel2d = kernel.reshape(o, c * 9)
        self.cols = self._im2col(padded, h, w) if self.needs_grad[1] else None
        self.in_shape = (n, c, h, w)
        return out if self.batched else out[0]

    @staticmethod
    def _im2col(padded: np.ndarray, h: int, w: int) -> np.ndarray:
        n, c = padded.shape[:2]
        cols = np.empty((n, c, 3, 3, h, w))
        for dy in range(3):
            for dx in range(3):
                cols[:, :, dy, dx] = padded[:, :, dy : dy + h, dx : dx + w]
        return cols.reshape(n, c * 9, h * w)

    def backward(self, grad):
        grad, _ = _as_batch(grad, 3)
        n, c, h, w = self.in_shape
        o = grad.shape[1]
        g = grad.reshape(n, o, h * w)
        grad_x = grad_kernel = grad_bias = None

        if self.needs_grad[0]:
            gcols = np.matmul(self.kernel2d.T, g).reshape(n, c, 3, 3, h, w)
            gpad = np.zeros((n, c, h + 2, w + 2))
            for dy in range(3):
                for dx in range(3):
                    gpad[:, :, dy : dy + h, dx : dx + w] += gcols[:, :, dy, dx]
            grad_x = gpad[:, :, 1:-1, 1:-1]
            if not self.batched:
                grad_x = grad_x[0]
        if self.needs_grad[1]:
            grad_kernel = np.tensordot(g, self.cols, axes=([0, 2], [0, 2]))
            grad_kernel = grad_kernel.reshape(o, c, 3, 3)
        if self.needs_grad[2]:
            grad_bias = g.sum(axis=(0, 2))
        return grad_x, grad_kernel, grad_bias


class _MaxPool2(Function):
    def forward(self, x):
        x, self.batched = _as_batch(x, 3)
        n, c, h, w = x.shape
        windows = (
            x.reshape(n, c, h // 2, 2, w // 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h // 2, w // 2, 4)
        )
        # argmax keeps the first maximum, i.e. row-major first within the window
        self.argmax = windows.argmax(axis=-1)[..., None]
        self.in_shape = (n, c, h, w)
        out = np.take_along_axis(windows, self.argmax, axis=-1)[..., 0]
        return out if self.batched else out[0]

    def backward(self, grad):
        grad, _ = _as_batch(grad, 3)
        n, c, h, w = self.in_shape
        windows = np.zeros((n, c, h // 2, w // 2, 4))
        np.put_along_axis(windows, self.argmax, grad[..., None], axis=-1)
        grad_x = (
            windows.reshape(n, c, h // 2, w // 2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h, w)
        )
        return (grad_x if self.batched else grad_x[0],)


class _GlobalAvgPool(Function):
    def forward(self, x):
        self.in_shape = x.shape
        return x.mean(axis=(-2, -1))

    def backward(self, grad):
        h, w = self.in_shape[-2:]
        expanded = np.broadcast_to(grad[..., None, None], self.in_shape)
        return (expanded / (h * w),)


class _Dense(Function):
    def forward(self, x, weight, bias):
        self.x = x
        self.weight = weight
        return x @ weight.T + bias

    def backward(self, grad):
        grad_x = grad_weight = grad_bias = None
        if self.needs_grad[0]:
            grad_x = grad @ self.weight
        if self.needs_grad[1]:
            if grad.ndim == 1:
                grad_weight = np.outer(grad, self.x)
            else:
                grad_weight = grad.T @ self.x
        if self.needs_grad[2]:
            grad_bias = grad if grad.ndim == 1 else grad.sum(axis=0)
        return grad_x, grad_weight, grad_bias


class _ReLU(Function):
    def forward(self, x):
        # subgradient at exactly 0 is 0
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad):
        return (grad * self.mask,)


class _Softmax(Function):
    def forward(self, logits):
        shifted = logits - logits.max(axis=-1, keepdims=True)
        exps = np.exp(shifted)
        self.out = exps / exps.sum(axis=-1, keepdims=True)
        return self.out

    def backward(self, grad):
        s = self.out
        return (s * (grad - (grad * s).sum(axis=-1, keepdims=True)),)


class _CrossEntropy(Function):
    # mean over the batch of -ln(max(p[target], PROB_FLOOR))
    def forward(self, probs, targets):
        probs2d, self.batched = _as_batch(probs, 1)
        self.targets = np.atleast_1d(targets.astype(np.int64))
        rows = np.arange(probs2d.shape[0])
        self.picked = probs2d[rows, self.targets]
        self.in_shape = probs2d.shape
        return np.array(-np.log(np.maximum(self.picked, PROB_FLOOR)).mean())

    def backward(self, grad):
        n = self.in_shape[0]
        rows = np.arange(n)
        grad_probs = np.zeros(self.in_shape)
        live = self.picked > PROB_FLOOR
        grad_probs[rows[live], self.targets[live]] = -grad / (self.picked[live] * n)
        return (grad_probs if self.batched else grad_probs[0], None)


class _Concat(Function):
    def forward(self, *arrays, axis):
        self.axis = axis
        self.sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        bounds = np.cumsum(self.sizes)[:-1]
        parts = np.split(grad, bounds, axis=self.axis)
        return tuple(p if need else None for p, need in zip(parts, self.needs_grad))


class _Narrow(Function):
    def forward(self, x, axis, start, length):
        self.in_shape = x.shape
        self.index = [slice(None)] * x.ndim
        self.index[axis] = slice(start, start + length)
        self.index = tuple(self.index)
        return x[self.index]

    def backward(self, grad):
        grad_x = np.zeros(self.in_shape)
        grad_x[self.index] = grad
        return (grad_x,)


class _Reshape(Function):
    def forward(self, x, shape):
        self.in_shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


class _Sum(Function):
    def forward(self, x):
        self.in_shape = x.shape
        return np.array(x.sum())

    def backward(self, grad):
        return (np.full(self.in_shape, float(grad)),)


class _Scale(Function):
    def forward(self, x, factor):
        self.factor = factor
        return x * factor

    def backward(self, grad):
        return (grad * self.factor,)


class TensorOps:
    """
    The differentiable operations of the model.

    Image ops take ``[C,H,W]`` or a batch ``[N,C,H,W]``; vector ops take
    ``[F]`` or ``[N,F]``.
    """

    @classmethod
    def conv2d(cls, x: Tensor, kernel: Tensor, bias: Tensor) -> Tensor:
        """3x3 convolution with zero 'same' padding."""
        if x.ndim not in (3, 4):
            cls._mismatch("conv2d", f"input must be [C,H,W] or [N,C,H,W], got {x.shape}")
        if kernel.ndim != 4 or kernel.shape[2:] != (3, 3):
            cls._mismatch("conv2d", f"kernel must be [C_out,C_in,3,3], got {kernel.shape}")
        channels = x.shape[-3]
        if kernel.shape[1] != channels:
            cls._mismatch(
                "conv2d", f"input has {channels} channels, kernel expects {kernel.shape[1]}"
            )
        if bias.shape != (kernel.shape[0],):
            cls._mismatch("conv2d", f"bias {bias.shape} vs {kernel.shape[0]} output channels")
        return _Conv2d.apply(x, kernel, bias)

    @classmethod
    def maxpool2(cls, x: Tensor) -> Tensor:
        if x.ndim not in (3, 4):
            cls._mismatch("maxpool2", f"input must be [C,H,W] or [N,C,H,W], got {x.shape}")
        height, width = x.shape[-2:]
        if height % 2 or width % 2:
            raise CustomException(
                TensorExceptionEnum.ODD_SPATIAL, height=height, width=width
            )
        return _MaxPool2.apply(x)

    @classmethod
    def global_avg_pool(cls, x: Tensor) -> Tensor:
        if x.ndim not in (3, 4):
            cls._mismatch(
                "global_avg_pool", f"input must be [C,H,W] or [N,C,H,W], got {x.shape}"
            )
        return _GlobalAvgPool.apply(x)

    @classmethod
    def dense(cls, x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
        if weight.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
            cls._mismatch("dense", f"input {x.shape} vs weight {weight.shape}")
        if bias.shape != (weight.shape[0],):
            cls._mismatch("dense", f"bias {bias.shape} vs weight {weight.shape}")
        return _Dense.apply(x, weight, bias)

    @classmethod
    def relu(cls, x: Tensor) -> Tensor:
        return _ReLU.apply(x)

    @classmethod
    def softmax(cls, logits: Tensor) -> Tensor:
        if logits.ndim not in (1, 2) or logits.shape[-1] < 2:
            cls._mismatch("softmax", f"need [K] or [N,K] with K >= 2, got {logits.shape}")
        return _Softmax.apply(logits)

    @classmethod
    def cross_entropy(cls, probs: Tensor, target: int | Sequence[int]) -> Tensor:
        """
        Clamped negative log-likelihood of the true class.

        ``probs`` is ``[K]`` with an int target, or ``[N,K]`` with N targets;
        the batched form returns the batch mean.
        """
        targets = np.atleast_1d(np.asarray(target))
        classes = probs.shape[-1]
        rows = 1 if probs.ndim == 1 else probs.shape[0]
        if probs.ndim not in (1, 2) or targets.shape != (rows,):
            cls._mismatch(
                "cross_entropy", f"probs {probs.shape} vs {targets.size} target(s)"
            )
        for index in targets:
            if not 0 <= int(index) < classes:
                raise CustomException(
                    TensorExceptionEnum.INDEX_OUT_OF_RANGE,
                    op="cross_entropy",
                    index=int(index),
                    classes=classes,
                )
        return _CrossEntropy.apply(probs, Tensor(targets.astype(np.float64)))

    @classmethod
    def concat(cls, tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
        return _Concat.apply(*tensors, axis=axis)

    @classmethod
    def narrow(cls, x: Tensor, axis: int, start: int, length: int) -> Tensor:
        return _Narrow.apply(x, axis=axis, start=start, length=length)

    @classmethod
    def reshape(cls, x: Tensor, shape: Sequence[int]) -> Tensor:
        return _Reshape.apply(x, shape=tuple(shape))

    @classmethod
    def sum(cls, x: Tensor) -> Tensor:
        return _Sum.apply(x)

    @classmethod
    def scale(cls, x: Tensor, factor: float) -> Tensor:
        return _Scale.apply(x, factor=factor)

    @staticmethod
    def _mismatch(op: str, detail: str):
        raise CustomException(TensorExceptionEnum.SHAPE_MISMATCH, op=op, detail=detail)

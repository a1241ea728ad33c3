import math

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.tensor.exceptions import TensorExceptionEnum
from msnet.tensor.models import AdamState, Parameter, Tensor
from msnet.tensor.services import AutogradService, OptimizerService, TensorOps


def naive_conv2d(x, kernel, bias):
    c_in, h, w = x.shape
    c_out = kernel.shape[0]
    out = np.zeros((c_out, h, w))
    for o in range(c_out):
        for y in range(h):
            for xx in range(w):
                acc = bias[o]
                for c in range(c_in):
                    for dx in range(3):
                        for dy in range(3):
                            sy, sx = y + dy - 1, xx + dx - 1
                            if 0 <= sy < h and 0 <= sx < w:
                                acc += x[c, sy, sx] * kernel[o, c, dy, dx]
                out[o, y, xx] = acc
    return out


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def check_gradients(build_loss, params, rng, samples=None):
    """Compare analytic and central-difference gradients of every trainable parameter."""
    grads = AutogradService.backward(build_loss(), params)
    worst = 0.0
    for param in params:
        if not param.trainable:
            assert param.name not in grads
            continue
        indices = list(np.ndindex(param.shape))
        if samples is not None and len(indices) > samples:
            picks = rng.choice(len(indices), size=samples, replace=False)
            indices = [indices[i] for i in picks]
        for index in indices:
            numeric = AutogradService.numerical_gradient(
                lambda: build_loss().item(), param, index
            )
            worst = max(worst, relative_error(grads[param.name][index], numeric))
    return worst


def projected_loss(out, rng_weights):
    flat = TensorOps.reshape(out, (-1,))
    return TensorOps.sum(TensorOps.dense(flat, rng_weights, Tensor([0.0])))


class TestConv2d:
    def test_all_ones_counts_neighbours(self):
        out = TensorOps.conv2d(
            Tensor(np.ones((1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))), Tensor([0.0])
        )
        assert out.data[0].tolist() == [[4, 6, 4], [6, 9, 6], [4, 6, 4]]

    def test_delta_kernel_is_identity(self, rng):
        x = rng.normal(size=(2, 5, 4))
        kernel = np.zeros((2, 2, 3, 3))
        kernel[0, 0, 1, 1] = 1.0
        kernel[1, 1, 1, 1] = 1.0
        out = TensorOps.conv2d(Tensor(x), Tensor(kernel), Tensor([0.0, 0.0]))
        assert np.array_equal(out.data, x)

    def test_zero_input_gives_bias(self, rng):
        out = TensorOps.conv2d(
            Tensor(np.zeros((3, 4, 4))),
            Tensor(rng.normal(size=(2, 3, 3, 3))),
            Tensor([0.5, -2.0]),
        )
        assert np.all(out.data[0] == 0.5)
        assert np.all(out.data[1] == -2.0)

    def test_matches_direct_summation_exactly_on_integer_data(self, rng):
        x = rng.integers(-8, 9, size=(3, 6, 5)).astype(float)
        kernel = rng.integers(-4, 5, size=(4, 3, 3, 3)).astype(float)
        bias = rng.integers(-3, 4, size=4).astype(float)
        out = TensorOps.conv2d(Tensor(x), Tensor(kernel), Tensor(bias))
        assert np.array_equal(out.data, naive_conv2d(x, kernel, bias))

    def test_matches_direct_summation_on_real_data(self, rng):
        for _ in range(20):
            x = rng.normal(size=(3, 6, 6))
            kernel = rng.normal(size=(4, 3, 3, 3))
            bias = rng.normal(size=4)
            out = TensorOps.conv2d(Tensor(x), Tensor(kernel), Tensor(bias))
            assert np.array_equal(out.data, naive_conv2d(x, kernel, bias))

    def test_batched_equals_per_image(self, rng):
        x = rng.normal(size=(3, 2, 4, 4))
        kernel = Tensor(rng.normal(size=(3, 2, 3, 3)))
        bias = Tensor(rng.normal(size=3))
        batched = TensorOps.conv2d(Tensor(x), kernel, bias).data
        for i in range(3):
            single = TensorOps.conv2d(Tensor(x[i]), kernel, bias).data
            assert np.array_equal(batched[i], single)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(CustomException) as exc:
            TensorOps.conv2d(
                Tensor(np.ones((2, 4, 4))), Tensor(np.ones((1, 3, 3, 3))), Tensor([0.0])
            )
        assert exc.value.error_code is TensorExceptionEnum.SHAPE_MISMATCH

    def test_gradients(self, rng):
        x = Parameter("x", rng.normal(size=(2, 5, 4)))
        kernel = Parameter("kernel", rng.normal(size=(3, 2, 3, 3)))
        bias = Parameter("bias", rng.normal(size=3))
        weights = Tensor(rng.normal(size=(1, 3 * 5 * 4)))

        def build():
            return projected_loss(TensorOps.conv2d(x.value, kernel.value, bias.value), weights)

        assert check_gradients(build, [x, kernel, bias], rng) <= 1e-6


class TestMaxPool2:
    def test_picks_window_maximum(self):
        out = TensorOps.maxpool2(Tensor([[[1.0, 2.0], [3.0, 4.0]]]))
        assert out.data.tolist() == [[[4.0]]]

    def test_constant_input(self):
        out = TensorOps.maxpool2(Tensor(np.full((2, 4, 6), 1.5)))
        assert out.shape == (2, 2, 3)
        assert np.all(out.data == 1.5)

    def test_tie_sends_gradient_to_first_element(self):
        x = Parameter("x", [[[5.0, 5.0], [1.0, 1.0]]])
        out = TensorOps.maxpool2(x.value)
        assert out.data.tolist() == [[[5.0]]]
        grads = AutogradService.backward(TensorOps.sum(out), [x])
        assert grads["x"].tolist() == [[[1.0, 0.0], [0.0, 0.0]]]

    def test_odd_size_rejected(self):
        with pytest.raises(CustomException) as exc:
            TensorOps.maxpool2(Tensor(np.ones((1, 3, 4))))
        assert exc.value.error_code is TensorExceptionEnum.ODD_SPATIAL

    def test_gradients(self, rng):
        x = Parameter("x", rng.normal(size=(2, 4, 6)))
        weights = Tensor(rng.normal(size=(1, 2 * 2 * 3)))
        build = lambda: projected_loss(TensorOps.maxpool2(x.value), weights)  # noqa: E731
        assert check_gradients(build, [x], rng) <= 1e-6


class TestGlobalAvgPool:
    def test_channel_means(self):
        x = np.stack([np.ones((3, 3)), np.full((3, 3), 3.0)])
        assert TensorOps.global_avg_pool(Tensor(x)).data.tolist() == [1.0, 3.0]

    def test_arithmetic_mean(self):
        out = TensorOps.global_avg_pool(Tensor([[[0.0, 2.0], [4.0, 6.0]]]))
        assert out.data.tolist() == [3.0]

    def test_gradient_is_uniform(self):
        x = Parameter("x", np.arange(12.0).reshape(1, 3, 4))
        grads = AutogradService.backward(TensorOps.sum(TensorOps.global_avg_pool(x.value)), [x])
        np.testing.assert_allclose(grads["x"], np.full((1, 3, 4), 1.0 / 12))

    def test_gradients(self, rng):
        x = Parameter("x", rng.normal(size=(3, 4, 2)))
        weights = Tensor(rng.normal(size=(1, 3)))
        build = lambda: projected_loss(TensorOps.global_avg_pool(x.value), weights)  # noqa: E731
        assert check_gradients(build, [x], rng) <= 1e-6


class TestDense:
    def test_identity_weight(self, rng):
        x = rng.normal(size=4)
        out = TensorOps.dense(Tensor(x), Tensor(np.eye(4)), Tensor(np.zeros(4)))
        assert np.array_equal(out.data, x)

    def test_small_case(self):
        out = TensorOps.dense(Tensor([2.0, 3.0]), Tensor([[1.0, 1.0]]), Tensor([1.0]))
        assert out.data.tolist() == [6.0]

    def test_matches_dot_product_loop(self, rng):
        x = rng.normal(size=7)
        weight = rng.normal(size=(5, 7))
        bias = rng.normal(size=5)
        out = TensorOps.dense(Tensor(x), Tensor(weight), Tensor(bias)).data
        expected = [bias[o] + sum(weight[o, i] * x[i] for i in range(7)) for o in range(5)]
        np.testing.assert_allclose(out, expected, rtol=1e-13, atol=1e-13)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(CustomException):
            TensorOps.dense(Tensor([1.0, 2.0, 3.0]), Tensor([[1.0, 1.0]]), Tensor([0.0]))

    def test_gradients_batched(self, rng):
        x = Parameter("x", rng.normal(size=(3, 4)))
        weight = Parameter("weight", rng.normal(size=(2, 4)))
        bias = Parameter("bias", rng.normal(size=2))
        proj = Tensor(rng.normal(size=(1, 6)))
        build = lambda: projected_loss(  # noqa: E731
            TensorOps.dense(x.value, weight.value, bias.value), proj
        )
        assert check_gradients(build, [x, weight, bias], rng) <= 1e-6


class TestReLU:
    def test_values(self):
        assert TensorOps.relu(Tensor([-1.0, 0.0, 2.0])).data.tolist() == [0.0, 0.0, 2.0]

    def test_idempotent(self, rng):
        x = Tensor(rng.normal(size=10))
        once = TensorOps.relu(x)
        assert np.array_equal(TensorOps.relu(once).data, once.data)

    def test_gradient(self):
        x = Parameter("x", [-1.0, 2.0])
        grads = AutogradService.backward(TensorOps.sum(TensorOps.relu(x.value)), [x])
        assert grads["x"].tolist() == [0.0, 1.0]

    def test_gradient_at_zero_is_zero(self):
        x = Parameter("x", [0.0])
        grads = AutogradService.backward(TensorOps.sum(TensorOps.relu(x.value)), [x])
        assert grads["x"].tolist() == [0.0]


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(
            TensorOps.softmax(Tensor([0.0, 0.0, 0.0])).data, [1 / 3] * 3, rtol=0, atol=1e-15
        )

    def test_analytic(self):
        out = TensorOps.softmax(Tensor([math.log(2.0), 0.0, 0.0])).data
        np.testing.assert_allclose(out, [0.5, 0.25, 0.25], rtol=0, atol=1e-15)

    def test_large_logits_do_not_overflow(self):
        out = TensorOps.softmax(Tensor([1000.0, 0.0, 0.0])).data
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-300)

    def test_sums_to_one_and_shift_invariant(self, rng):
        for _ in range(50):
            logits = rng.normal(scale=20.0, size=5)
            out = TensorOps.softmax(Tensor(logits)).data
            shifted = TensorOps.softmax(Tensor(logits + rng.normal(scale=50.0))).data
            assert abs(out.sum() - 1.0) <= 1e-12
            np.testing.assert_allclose(out, shifted, rtol=0, atol=1e-12)

    def test_gradients(self, rng):
        logits = Parameter("logits", rng.normal(size=(2, 4)))
        proj = Tensor(rng.normal(size=(1, 8)))
        build = lambda: projected_loss(TensorOps.softmax(logits.value), proj)  # noqa: E731
        assert check_gradients(build, [logits], rng) <= 1e-6


class TestCrossEntropy:
    def test_uniform_is_ln3(self):
        for target in range(3):
            loss = TensorOps.cross_entropy(Tensor([1 / 3, 1 / 3, 1 / 3]), target)
            assert loss.item() == pytest.approx(math.log(3.0), abs=1e-12)

    def test_certain_prediction_is_zero(self):
        assert TensorOps.cross_entropy(Tensor([1.0, 0.0, 0.0]), 0).item() == 0.0

    def test_clamped_log(self):
        loss = TensorOps.cross_entropy(Tensor([0.0, 1.0, 0.0]), 0).item()
        assert loss == pytest.approx(-math.log(1e-12), abs=1e-9)
        assert loss == pytest.approx(27.631, abs=1e-3)

    def test_index_out_of_range(self):
        with pytest.raises(CustomException) as exc:
            TensorOps.cross_entropy(Tensor([0.2, 0.3, 0.5]), 3)
        assert exc.value.error_code is TensorExceptionEnum.INDEX_OUT_OF_RANGE

    def test_batched_is_mean(self):
        probs = Tensor([[0.5, 0.25, 0.25], [0.1, 0.8, 0.1]])
        loss = TensorOps.cross_entropy(probs, [0, 1]).item()
        assert loss == pytest.approx((math.log(2.0) - math.log(0.8)) / 2, abs=1e-15)

    def test_gradients_through_softmax(self, rng):
        logits = Parameter("logits", rng.normal(size=(4, 3)))
        targets = [0, 2, 1, 2]
        build = lambda: TensorOps.cross_entropy(TensorOps.softmax(logits.value), targets)  # noqa: E731
        assert check_gradients(build, [logits], rng) <= 1e-6


class TestBackward:
    def test_sum_gives_ones(self, rng):
        p = Parameter("p", rng.normal(size=(2, 3)))
        grads = AutogradService.backward(TensorOps.sum(p.value), [p])
        assert np.array_equal(grads["p"], np.ones((2, 3)))

    def test_zero_scale_gives_zeros(self, rng):
        p = Parameter("p", rng.normal(size=4))
        grads = AutogradService.backward(TensorOps.sum(TensorOps.scale(p.value, 0.0)), [p])
        assert np.array_equal(grads["p"], np.zeros(4))

    def test_non_scalar_loss_rejected(self):
        p = Parameter("p", [1.0, 2.0])
        with pytest.raises(CustomException) as exc:
            AutogradService.backward(TensorOps.relu(p.value), [p])
        assert exc.value.error_code is TensorExceptionEnum.NOT_SCALAR

    def test_frozen_parameters_get_no_gradient(self, rng):
        p = Parameter("p", rng.normal(size=3))
        q = Parameter("q", rng.normal(size=3), trainable=False)
        loss = TensorOps.sum(TensorOps.concat([p.value, q.value]))
        assert set(AutogradService.backward(loss, [p, q])) == {"p"}

    def test_reused_tensor_accumulates(self):
        p = Parameter("p", [1.0, -2.0])
        loss = TensorOps.sum(TensorOps.concat([p.value, p.value, p.value]))
        assert AutogradService.backward(loss, [p])["p"].tolist() == [3.0, 3.0]

    def test_concat_narrow_reshape_gradients(self, rng):
        a = Parameter("a", rng.normal(size=(2, 3)))
        b = Parameter("b", rng.normal(size=(2, 2)))
        proj = Tensor(rng.normal(size=(1, 4)))

        def build():
            joined = TensorOps.concat([a.value, b.value], axis=-1)
            part = TensorOps.narrow(joined, axis=1, start=1, length=2)
            return projected_loss(TensorOps.reshape(part, (4,)), proj)

        assert check_gradients(build, [a, b], rng) <= 1e-6


class TestAdam:
    def test_zero_gradient_first_step_leaves_parameter(self, rng):
        value = rng.normal(size=(3, 2))
        p = Parameter("p", value.copy())
        state = AdamState.initial([p])
        assert state.t == 0
        assert not state.m["p"].any() and not state.v["p"].any()
        OptimizerService.adam_step([p], {"p": np.zeros((3, 2))}, state, lr=0.01)
        assert np.array_equal(p.value.data, value)
        assert state.t == 1

    def test_single_step_closed_form(self):
        p = Parameter("w", [0.0])
        OptimizerService.adam_step([p], {"w": np.array([0.5])}, AdamState.initial([p]), lr=0.01)
        assert p.value.data[0] == pytest.approx(-0.01, abs=1e-9)

    def test_frozen_parameter_unchanged_bit_exact(self, rng):
        value = rng.normal(size=5)
        frozen = Parameter("frozen", value.copy(), trainable=False)
        live = Parameter("live", rng.normal(size=5))
        state = AdamState.initial([frozen, live])
        for _ in range(10):
            grads = {"frozen": rng.normal(size=5), "live": rng.normal(size=5)}
            OptimizerService.adam_step([frozen, live], grads, state, lr=0.1)
        assert frozen.value.data.tobytes() == value.tobytes()
        assert state.t == 10

    def test_shape_mismatch_rejected(self):
        p = Parameter("p", [1.0, 2.0])
        with pytest.raises(CustomException) as exc:
            OptimizerService.adam_step([p], {"p": np.zeros(3)}, AdamState.initial([p]), lr=0.1)
        assert exc.value.error_code is TensorExceptionEnum.SHAPE_MISMATCH

    def test_duplicate_names_rejected(self):
        with pytest.raises(CustomException) as exc:
            AdamState.initial([Parameter("p", [1.0]), Parameter("p", [2.0])])
        assert exc.value.error_code is TensorExceptionEnum.DUPLICATE_PARAMETER

    def test_minimises_a_quadratic(self):
        p = Parameter("p", [3.0, -2.0])
        state = AdamState.initial([p])
        for _ in range(500):
            # d/dp of 0.5*|p|^2 is p itself
            grads = {"p": p.value.data.copy()}
            OptimizerService.adam_step([p], grads, state, lr=0.05)
        np.testing.assert_allclose(p.value.data, [0.0, 0.0], atol=0.05)

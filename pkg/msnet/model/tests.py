import math

import numpy as np
import pytest

from common.exceptions.custom_exceptions import CustomException
from msnet.imageproc.models import ImageBuffer
from msnet.model.enums import FreezeStage, ScaleMode
from msnet.model.exceptions import ModelExceptionEnum
from msnet.model.models import HEAD_NAMES, BackboneConfig, ModelParams, block_names
from msnet.model.serializers import WeightSerializer
from msnet.model.services import ModelService
from msnet.tensor.models import Parameter
from msnet.tensor.services import AutogradService, TensorOps

TINY = BackboneConfig(widths=(3, 4, 5), side=8)


def tiny_model(seed=0, mode=ScaleMode.MULTI_SCALE, hidden=6):
    params = ModelService.build_model(TINY, hidden, np.random.default_rng(seed), mode=mode)
    # nonzero biases keep ReLU inputs and pooling windows away from exact ties
    bias_rng = np.random.default_rng(seed + 100)
    for param in params:
        if param.name.endswith("bias"):
            param.value.data[:] = bias_rng.normal(scale=0.1, size=param.shape)
    return params


def images(rng, n, side=8):
    return rng.random((n, 3, side, side))


def clone(params):
    copy = ModelParams(
        backbone=params.backbone,
        hidden_units=params.hidden_units,
        mode=params.mode,
        inputs=params.inputs,
    )
    for param in params:
        copy.parameters[param.name] = Parameter(param.name, param.value.data.copy())
    return copy


def activation_signature(tensor):
    """ReLU masks and pooling argmaxes of the recorded graph."""
    parts, stack, seen = [], [tensor], set()
    while stack:
        node = stack.pop()
        if id(node) in seen or node.creator is None:
            continue
        seen.add(id(node))
        for attr in ("mask", "argmax"):
            if hasattr(node.creator, attr):
                parts.append(getattr(node.creator, attr).tobytes())
        stack.extend(node.creator.inputs)
    return parts


def reference_backbone(params, x):
    """Plain numpy forward of one ``[3,S,S]`` image."""
    for block in range(1, params.backbone.num_blocks + 1):
        kernel_name, bias_name = block_names(block)
        kernel = params[kernel_name].value.data
        bias = params[bias_name].value.data
        _, h, w = x.shape
        padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
        out = np.zeros((kernel.shape[0], h, w)) + bias[:, None, None]
        for dy in range(3):
            for dx in range(3):
                out += np.einsum("oc,chw->ohw", kernel[:, :, dy, dx], padded[:, dy : dy + h, dx : dx + w])
        out = np.maximum(out, 0.0)
        x = out.reshape(out.shape[0], h // 2, 2, w // 2, 2).max(axis=(2, 4))
    return x.mean(axis=(1, 2))


class TestBuildModel:
    def test_default_schema(self):
        params = ModelService.build_model(BackboneConfig(), 32, np.random.default_rng(0))
        assert [(p.name, p.shape) for p in params] == [
            ("block1.kernel", (8, 3, 3, 3)),
            ("block1.bias", (8,)),
            ("block2.kernel", (16, 8, 3, 3)),
            ("block2.bias", (16,)),
            ("block3.kernel", (32, 16, 3, 3)),
            ("block3.bias", (32,)),
            ("block4.kernel", (64, 32, 3, 3)),
            ("block4.bias", (64,)),
            ("hidden.weight", (32, 128)),
            ("hidden.bias", (32,)),
            ("output.weight", (3, 32)),
            ("output.bias", (3,)),
        ]

    def test_single_scale_head_width(self):
        params = ModelService.build_model(
            BackboneConfig(side=128), 32, np.random.default_rng(0), mode=ScaleMode.SINGLE_SCALE
        )
        assert params["hidden.weight"].shape == (32, 64)

    def test_glorot_bounds_and_zero_biases(self):
        params = ModelService.build_model(BackboneConfig(), 32, np.random.default_rng(1))
        for param in params:
            data = param.value.data
            if param.name.endswith("bias"):
                assert not data.any()
                continue
            if data.ndim == 4:
                fan_in, fan_out = data.shape[1] * 9, data.shape[0] * 9
            else:
                fan_in, fan_out = data.shape[1], data.shape[0]
            limit = math.sqrt(6 / (fan_in + fan_out))
            assert np.abs(data).max() <= limit
            assert np.abs(data).max() > 0.5 * limit
            assert param.trainable

    def test_seed_determinism(self):
        first = ModelService.build_model(TINY, 6, np.random.default_rng(5)).snapshot()
        second = ModelService.build_model(TINY, 6, np.random.default_rng(5)).snapshot()
        other = ModelService.build_model(TINY, 6, np.random.default_rng(6)).snapshot()
        assert all(np.array_equal(first[k], second[k]) for k in first)
        assert not np.array_equal(first["block1.kernel"], other["block1.kernel"])

    @pytest.mark.parametrize("widths,side", [((8, 16), 64), ((8, 16, 32, 64), 60)])
    def test_invalid_backbone(self, widths, side):
        with pytest.raises(CustomException) as exc:
            BackboneConfig(widths=widths, side=side)
        assert exc.value.error_code is ModelExceptionEnum.INVALID_CONFIG


class TestBackbone:
    def test_default_feature_shape(self, rng):
        params = ModelService.build_model(BackboneConfig(), 32, rng)
        features = ModelService.backbone_forward(params, rng.random((3, 64, 64)))
        assert features.shape == (64,)
        assert np.isfinite(features.data).all()

    def test_matches_reference_forward(self, rng):
        params = tiny_model()
        x = rng.random((3, 8, 8))
        got = ModelService.backbone_forward(params, x).data
        np.testing.assert_allclose(got, reference_backbone(params, x), rtol=0, atol=1e-12)

    def test_batched_matches_single(self, rng):
        params = tiny_model()
        batch = images(rng, 4)
        together = ModelService.backbone_forward(params, batch).data
        for i in range(4):
            alone = ModelService.backbone_forward(params, batch[i]).data
            np.testing.assert_allclose(together[i], alone, rtol=0, atol=1e-14)

    def test_wrong_side_rejected(self, rng):
        with pytest.raises(CustomException) as exc:
            ModelService.backbone_forward(tiny_model(), rng.random((3, 16, 16)))
        assert exc.value.error_code is ModelExceptionEnum.WRONG_SIDE


class TestMultiscale:
    def test_identical_inputs_give_identical_halves(self, rng):
        params = tiny_model()
        x = rng.random((3, 8, 8))
        fused = ModelService.multiscale_features(params, x, x).data
        f = params.feature_width
        assert fused.shape == (2 * f,)
        np.testing.assert_allclose(fused[:f], fused[f:], rtol=0, atol=1e-15)

    def test_swapping_inputs_swaps_halves(self, rng):
        params = tiny_model()
        coarse, fine = rng.random((3, 8, 8)), rng.random((3, 8, 8))
        f = params.feature_width
        ab = ModelService.multiscale_features(params, coarse, fine).data
        ba = ModelService.multiscale_features(params, fine, coarse).data
        np.testing.assert_allclose(ab[:f], ba[f:], rtol=0, atol=1e-15)
        np.testing.assert_allclose(ab[f:], ba[:f], rtol=0, atol=1e-15)

    def test_perturbing_backbone_moves_both_halves(self, rng):
        params = tiny_model()
        coarse, fine = rng.random((3, 8, 8)), rng.random((3, 8, 8))
        f = params.feature_width
        before = ModelService.multiscale_features(params, coarse, fine).data
        params["block1.kernel"].value.data += 0.05 * rng.normal(size=(3, 3, 3, 3))
        after = ModelService.multiscale_features(params, coarse, fine).data
        assert not np.allclose(before[:f], after[:f])
        assert not np.allclose(before[f:], after[f:])

    def test_output_is_distribution(self, rng):
        params = tiny_model()
        probs = ModelService.multiscale_forward(params, rng.random((3, 8, 8)), rng.random((3, 8, 8)))
        assert probs.shape == (3,)
        assert abs(probs.data.sum() - 1.0) <= 1e-12
        assert (probs.data > 0).all()

    def test_batched_forward_matches_single(self, rng):
        params = tiny_model()
        coarse, fine = images(rng, 3), images(rng, 3)
        together = ModelService.forward_batch(params, [coarse, fine]).data
        for i in range(3):
            alone = ModelService.multiscale_forward(params, coarse[i], fine[i]).data
            np.testing.assert_allclose(together[i], alone, rtol=0, atol=1e-14)

    def test_mode_mismatch(self, rng):
        params = tiny_model(mode=ScaleMode.SINGLE_SCALE)
        with pytest.raises(CustomException) as exc:
            ModelService.multiscale_forward(params, rng.random((3, 8, 8)), rng.random((3, 8, 8)))
        assert exc.value.error_code is ModelExceptionEnum.MODE_MISMATCH

    def test_view_count(self, rng):
        with pytest.raises(CustomException) as exc:
            ModelService.forward_batch(tiny_model(), [images(rng, 2)])
        assert exc.value.error_code is ModelExceptionEnum.VIEW_COUNT

    def test_forward_count_counts_samples(self, rng):
        params = tiny_model()
        ModelService.reset_forward_count()
        ModelService.forward_batch(params, [images(rng, 5), images(rng, 5)])
        ModelService.multiscale_forward(params, rng.random((3, 8, 8)), rng.random((3, 8, 8)))
        assert ModelService.forward_count == 6


class TestGradients:
    def test_shared_kernel_gradient_equals_untied_sum(self, rng):
        shared = tiny_model()
        coarse, fine = images(rng, 3), images(rng, 3)
        targets = [0, 1, 2]

        loss = TensorOps.cross_entropy(ModelService.multiscale_forward(shared, coarse, fine), targets)
        grads = AutogradService.backward(loss, list(shared))

        left, right = clone(shared), clone(shared)
        for name in HEAD_NAMES:
            right[name].trainable = False
        features = TensorOps.concat(
            [ModelService.backbone_forward(left, coarse), ModelService.backbone_forward(right, fine)],
            axis=-1,
        )
        untied_loss = TensorOps.cross_entropy(ModelService.head_forward(left, features), targets)
        left_grads = AutogradService.backward(untied_loss, list(left))
        right_grads = AutogradService.backward(untied_loss, list(right))

        assert untied_loss.item() == pytest.approx(loss.item(), abs=1e-12)
        for block in range(1, TINY.num_blocks + 1):
            for name in block_names(block):
                np.testing.assert_allclose(
                    grads[name], left_grads[name] + right_grads[name], rtol=0, atol=1e-9
                )
        for name in HEAD_NAMES:
            np.testing.assert_allclose(grads[name], left_grads[name], rtol=0, atol=1e-9)

    def test_full_model_matches_finite_differences(self):
        rng = np.random.default_rng(77)
        params = tiny_model(seed=3)
        coarse, fine = images(rng, 3), images(rng, 3)
        targets = [0, 1, 2]

        def build():
            return TensorOps.cross_entropy(
                ModelService.multiscale_forward(params, coarse, fine), targets
            )

        loss = build()
        grads = AutogradService.backward(loss, list(params))
        signature = activation_signature(loss)
        h = 1e-5

        checked = 0
        for param in params:
            indices = list(np.ndindex(param.shape))
            picks = rng.choice(len(indices), size=min(8, len(indices)), replace=False)
            for pick in picks:
                index = indices[pick]
                data = param.value.data
                original = data[index]
                data[index] = original + h
                upper = build()
                data[index] = original - h
                lower = build()
                data[index] = original
                if activation_signature(upper) != signature or activation_signature(lower) != signature:
                    continue
                numeric = (upper.item() - lower.item()) / (2 * h)
                analytic = grads[param.name][index]
                relative = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
                assert relative <= 1e-6, (param.name, index, analytic, numeric)
                checked += 1
        assert checked >= 50

    def test_numerical_gradient_helper_agrees(self, rng):
        params = tiny_model(seed=4)
        coarse, fine = images(rng, 2), images(rng, 2)

        def loss_value():
            probs = ModelService.multiscale_forward(params, coarse, fine)
            return TensorOps.cross_entropy(probs, [1, 2]).item()

        probs = ModelService.multiscale_forward(params, coarse, fine)
        grads = AutogradService.backward(TensorOps.cross_entropy(probs, [1, 2]), list(params))
        for index in [(0, 0), (1, 3), (2, 5)]:
            numeric = AutogradService.numerical_gradient(loss_value, params["output.weight"], index)
            analytic = grads["output.weight"][index]
            assert abs(analytic - numeric) <= 1e-6 * max(abs(analytic), abs(numeric), 1e-8)


class TestFreeze:
    def test_stage1_is_head_only(self):
        params = ModelService.set_freeze(tiny_model(), FreezeStage.STAGE1)
        assert params.trainable_names() == set(HEAD_NAMES)

    def test_stage2_unfreezes_last_two_blocks(self):
        params = ModelService.build_model(BackboneConfig(), 32, np.random.default_rng(0))
        ModelService.set_freeze(params, FreezeStage.STAGE2)
        assert params.trainable_names() == set(HEAD_NAMES) | {
            "block3.kernel",
            "block3.bias",
            "block4.kernel",
            "block4.bias",
        }

    def test_stage1_subset_of_stage2(self):
        params = tiny_model()
        stage1 = ModelService.set_freeze(params, FreezeStage.STAGE1).trainable_names()
        stage2 = ModelService.set_freeze(params, FreezeStage.STAGE2).trainable_names()
        assert stage1 < stage2

    def test_unfreeze_count_bounds(self):
        with pytest.raises(CustomException):
            ModelService.set_freeze(tiny_model(), FreezeStage.STAGE2, unfreeze_blocks=3)

    def test_frozen_backbone_records_no_graph(self, rng):
        params = ModelService.set_freeze(tiny_model(), FreezeStage.STAGE1)
        features = ModelService.backbone_forward(params, rng.random((3, 8, 8)))
        assert features.creator is None


class TestWeightSerializer:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        params = tiny_model()
        path = tmp_path / "model.mscw"
        WeightSerializer.save(params, path)
        loaded = WeightSerializer.load(path)
        assert loaded.names() == params.names()
        for param in params:
            assert loaded[param.name].value.data.tobytes() == param.value.data.tobytes()
        assert loaded.mode is params.mode
        assert loaded.backbone == params.backbone
        assert loaded.inputs == params.inputs
        assert loaded.hidden_units == params.hidden_units

        coarse, fine = rng.random((3, 8, 8)), rng.random((3, 8, 8))
        before = ModelService.multiscale_forward(params, coarse, fine).data
        after = ModelService.multiscale_forward(loaded, coarse, fine).data
        assert before.tobytes() == after.tobytes()

    def test_header_layout(self):
        payload = WeightSerializer.dumps(tiny_model())
        assert payload[:4] == b"MSCW"
        assert payload[4:8] == (1).to_bytes(4, "little")
        assert payload[8:12] == (12).to_bytes(4, "little")

    def test_single_byte_corruption_fails_crc(self):
        params = tiny_model()
        payload = bytearray(WeightSerializer.dumps(params))
        start = bytes(payload).find(params["hidden.weight"].value.data.tobytes())
        for offset in range(0, 8 * 30, 7):
            corrupt = bytearray(payload)
            corrupt[start + offset] ^= 0x10
            with pytest.raises(CustomException) as exc:
                WeightSerializer.loads(bytes(corrupt))
            assert exc.value.error_code is ModelExceptionEnum.CRC_MISMATCH

    def test_bad_magic(self):
        payload = bytearray(WeightSerializer.dumps(tiny_model()))
        payload[:4] = b"NOPE"
        with pytest.raises(CustomException) as exc:
            WeightSerializer.loads(bytes(payload))
        assert exc.value.error_code is ModelExceptionEnum.BAD_MAGIC

    def test_version_mismatch(self):
        payload = bytearray(WeightSerializer.dumps(tiny_model()))
        payload[4:8] = (2).to_bytes(4, "little")
        with pytest.raises(CustomException) as exc:
            WeightSerializer.loads(bytes(payload))
        assert exc.value.error_code is ModelExceptionEnum.VERSION_MISMATCH

    def test_every_truncation_detected(self):
        payload = WeightSerializer.dumps(tiny_model())
        for cut in range(0, len(payload), 13):
            with pytest.raises(CustomException) as exc:
                WeightSerializer.loads(payload[:cut])
            assert exc.value.error_code is ModelExceptionEnum.TRUNCATED

    def test_trailing_bytes_rejected(self):
        payload = WeightSerializer.dumps(tiny_model()) + b"\x00"
        with pytest.raises(CustomException) as exc:
            WeightSerializer.loads(payload)
        assert exc.value.error_code is ModelExceptionEnum.CORRUPT

    def test_mode_mismatch(self, tmp_path):
        path = tmp_path / "single.mscw"
        WeightSerializer.save(tiny_model(mode=ScaleMode.SINGLE_SCALE), path)
        with pytest.raises(CustomException) as exc:
            WeightSerializer.load(path, mode=ScaleMode.MULTI_SCALE)
        assert exc.value.error_code is ModelExceptionEnum.MODE_MISMATCH
        assert WeightSerializer.load(path, mode=ScaleMode.SINGLE_SCALE).mode is ScaleMode.SINGLE_SCALE


class TestPreprocess:
    def test_views_follow_mode(self, rng):
        image = ImageBuffer(rng.integers(0, 256, size=(40, 40, 3), dtype=np.uint8))
        multi = ModelService.preprocess(tiny_model(), image)
        assert [v.shape for v in multi] == [(3, 8, 8), (3, 8, 8)]
        single = ModelService.preprocess(tiny_model(mode=ScaleMode.SINGLE_SCALE), image)
        assert [v.shape for v in single] == [(3, 8, 8)]

from typing import Sequence

import numpy as np
from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from msnet.data.enums import ClassLabel
from msnet.data.models import ManifestEntry
from msnet.imageproc.enums import Dihedral
from msnet.imageproc.models import ImageBuffer
from msnet.imageproc.serializers import PpmSerializer
from msnet.infer.exceptions import InferExceptionEnum
from msnet.infer.models import PredictionRecord, Predictions
from msnet.model.models import ModelParams
from msnet.model.services import ModelService

PROB_FLOOR = 1e-7


class InferService:
    @classmethod
    def tta_predict(cls, params: ModelParams, image: ImageBuffer, tta: bool = True) -> np.ndarray:
        """
        Class probabilities of one image.

        With ``tta`` the model sees all 8 dihedral transforms of the
        preprocessed views, in canonical order, and the softmax outputs are
        averaged; otherwise a single forward pass.
        """
        views = ModelService.preprocess(params, image)
        elements = Dihedral.elements() if tta else [Dihedral.ID]
        batch = [np.stack([element.transform(view) for element in elements]) for view in views]
        probs = ModelService.forward_batch(params, batch).data
        return probs.sum(axis=0) / len(elements)

    @classmethod
    def to_binary_tasks(cls, probs: Sequence[float]) -> tuple[float, float]:
        """(melanoma_score, sk_score) by one-vs-rest."""
        return float(probs[ClassLabel.MELANOMA]), float(probs[ClassLabel.SEBORRHEIC_KERATOSIS])

    @classmethod
    def predict_manifest(
        cls, params: ModelParams, manifest: Sequence[ManifestEntry], tta: bool = True
    ) -> Predictions:
        records = []
        for entry in manifest:
            probs = cls.tta_predict(params, PpmSerializer.read(entry.path), tta)
            records.append(PredictionRecord.checked(entry.image_id, probs))
        logger.info(f"predicted {len(records)} images (tta={'on' if tta else 'off'})")
        return sorted(records, key=lambda record: record.image_id)

    @classmethod
    def geometric_pool(cls, prob_sets: Sequence[np.ndarray]) -> np.ndarray:
        """
        Per-class geometric mean over the first axis, before renormalization.

        Probabilities are clamped to ``[PROB_FLOOR, 1]`` so a single zero
        cannot annihilate the product.
        """
        stacked = np.clip(np.asarray(prob_sets, dtype=np.float64), PROB_FLOOR, 1.0)
        return np.exp(np.log(stacked).mean(axis=0))

    @classmethod
    def ensemble_geometric(cls, prediction_sets: Sequence[Sequence[PredictionRecord]]) -> Predictions:
        """Merge K aligned prediction sets; the result is sorted by image id."""
        if not prediction_sets:
            raise CustomException(InferExceptionEnum.NO_PREDICTIONS)

        by_id = [cls._index(records, position) for position, records in enumerate(prediction_sets)]
        reference = set(by_id[0])
        diffs = []
        for position, records in enumerate(by_id[1:], start=2):
            missing = sorted(reference - set(records))
            extra = sorted(set(records) - reference)
            if missing:
                diffs.append(f"set {position} lacks {', '.join(missing)}")
            if extra:
                diffs.append(f"set {position} adds {', '.join(extra)}")
        if diffs:
            raise CustomException(InferExceptionEnum.ID_MISMATCH, diff="; ".join(diffs))

        image_ids = sorted(reference)
        stacked = [[records[image_id].probs for image_id in image_ids] for records in by_id]
        logger.debug(f"geometric ensemble of {len(stacked)} sets over {len(image_ids)} images")
        if not image_ids:
            return []
        pooled = cls.geometric_pool(stacked)
        merged = pooled / pooled.sum(axis=-1, keepdims=True)
        return [PredictionRecord.checked(image_id, row) for image_id, row in zip(image_ids, merged)]

    @staticmethod
    def _index(records: Sequence[PredictionRecord], position: int) -> dict[str, PredictionRecord]:
        index = {}
        for record in records:
            if record.image_id in index:
                raise CustomException(
                    InferExceptionEnum.DUPLICATE_ID,
                    image_id=record.image_id,
                    where=f" in set {position + 1}",
                )
            index[record.image_id] = record
        return index

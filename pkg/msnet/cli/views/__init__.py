from .ensemble_view import EnsembleView
from .evaluate_view import EvaluateView
from .predict_view import PredictView
from .synth_view import SynthView
from .train_view import TrainView

__all__ = [
    "EnsembleView",
    "EvaluateView",
    "PredictView",
    "SynthView",
    "TrainView",
]

from .weight_serializer import WeightSerializer

__all__ = ["WeightSerializer"]

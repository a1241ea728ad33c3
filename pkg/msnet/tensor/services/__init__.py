from .autograd_service import AutogradService
from .ops_service import TensorOps
from .optimizer_service import OptimizerService

__all__ = [
    "AutogradService",
    "OptimizerService",
    "TensorOps",
]

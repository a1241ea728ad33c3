from .manifest_serializer import ManifestSerializer

__all__ = ["ManifestSerializer"]

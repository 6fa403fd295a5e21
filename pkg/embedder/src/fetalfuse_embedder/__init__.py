"""Deep-embedding exporter for the GA-estimation pipeline."""
from .exporter import EMBED_DIM, ExportConfig, export_embeddings

__all__ = ["EMBED_DIM", "ExportConfig", "export_embeddings"]
__version__ = "0.1.0"

"""Neural polar decoders for link-level communication simulation."""
__version__ = "0.1.0"

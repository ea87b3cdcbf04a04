"""Intersection space complexes on finite stratified cell complexes."""
__version__ = "0.1.0"

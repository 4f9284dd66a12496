"""Elastic curves on the 2-sphere: gradient flow, elastica, second variation and Hopf tori."""

from .errors import ElasticaError
from .sphere_geom import DiscreteCurve, great_circle, latitude_circle

__all__ = ["DiscreteCurve", "ElasticaError", "great_circle", "latitude_circle"]
__version__ = "0.1.0"

"""Information-theoretic generalization bounds for learning with data augmentation.

Subpackages: ``core`` (losses and bound assembly), ``discrete`` (exact
finite-world verification), ``gaussian`` (closed forms and Monte-Carlo
oracles), ``geometry`` (group actions and diameters), ``nn`` (minimal
network), ``estimators`` (neural MI/KL estimation), ``pipeline`` (experiment
harness), ``cli`` (command line).
"""

from . import core, discrete, estimators, gaussian, geometry, nn, pipeline

__version__ = "0.1.0"

__all__ = [
    "core",
    "discrete",
    "estimators",
    "gaussian",
    "geometry",
    "nn",
    "pipeline",
    "__version__",
]

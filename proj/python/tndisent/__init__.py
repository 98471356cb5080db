"""Tensor-network disentangler for dense layers.

Factorizes a weight matrix into unitary brickwork circuits acting on a
low-bond-dimension residual operator, with enhancement (deeper circuits,
larger bonds) and retraining on top.
"""

from tndisent._core import (
    FactorizedLayer,
    GuardError,
    NumericError,
    ValidationError,
    baselines,
    disentangle,
    enhance,
    factorize,
    plant,
    read_qten,
    retrain_data,
    retrain_matrix,
    shot_study,
    write_qten,
    __version__,
)

__all__ = [
    "FactorizedLayer",
    "GuardError",
    "NumericError",
    "ValidationError",
    "baselines",
    "disentangle",
    "enhance",
    "factorize",
    "plant",
    "read_qten",
    "retrain_data",
    "retrain_matrix",
    "shot_study",
    "write_qten",
    "__version__",
]

"""Online binary matrix completion with side information.

Matrix exponentiated gradient predictor over an embedding built from
side-information matrices (graph PDLaplacians or kernel Grams), in both
a transductive form (sides fixed up front) and an inductive kernelized
form (Grams grown over identities observed online), plus the complexity
bounds and synthetic generators used to exercise them.
"""

__version__ = "0.1.0"

from . import (
    experiments,
    inductive,
    props,
    quasidim,
    sideinfo,
    spectral,
    synth,
    transductive,
)

__all__ = [
    "spectral",
    "sideinfo",
    "quasidim",
    "transductive",
    "inductive",
    "synth",
    "experiments",
    "props",
    "__version__",
]

from typing import Tuple

import numpy as np
import numpy.typing as npt

Matrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]
MatrixStack = npt.NDArray[np.float64]
Word = Tuple[int, ...]

__all__ = [
    "Matrix",
    "Vector",
    "MatrixStack",
    "Word",
]

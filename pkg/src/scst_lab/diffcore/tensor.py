"""Dense float64 tensors.

Tensors are plain C-contiguous ``numpy`` arrays of ``float64``. Every op in
:mod:`scst_lab.diffcore.ops` returns a fresh array and checks that it is
finite; a NaN or Inf anywhere is a hard error.
"""

from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt

from ..exceptions import DimensionError, NonFiniteError

Tensor: TypeAlias = npt.NDArray[np.float64]
TokenArray: TypeAlias = npt.NDArray[np.int64]


def as_tensor(data: Any, shape: tuple[int, ...] | None = None) -> Tensor:
    """Build a float64 tensor, optionally checking its extents.

    Raises:
        DimensionError: If ``shape`` is given and does not match.
        NonFiniteError: If the data holds NaN or Inf.
    """
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if shape is not None and arr.shape != shape:
        raise DimensionError(f"Expected shape {shape}, got {arr.shape}")
    return ensure_finite(arr, "tensor")


def ensure_finite(arr: Tensor, name: str) -> Tensor:
    """Return ``arr`` unchanged if every value is finite.

    Raises:
        NonFiniteError: Naming ``name`` when a NaN or Inf is present.
    """
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"Non-finite value in {name} (shape {arr.shape})")
    return arr


def zeros(shape: tuple[int, ...]) -> Tensor:
    """Zero tensor of the given extents."""
    return np.zeros(shape, dtype=np.float64)

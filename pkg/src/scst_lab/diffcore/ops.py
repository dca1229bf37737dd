"""Forward/backward primitives used by the captioning models.

Each primitive comes as a pair: ``op(...)`` computes the forward value and
``op_backward(...)`` maps the upstream gradient ``dout`` to the gradient of
each input. Backward functions take whatever forward quantity makes them
cheapest (the output for sigmoid/tanh/softmax, the input for maxout).
"""

from collections.abc import Callable

import numpy as np

from ..exceptions import DimensionError
from .tensor import Tensor, ensure_finite


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product ``a @ b``; ``a`` may carry leading batch axes.

    Raises:
        DimensionError: If the inner extents disagree or ``b`` is not 2-D.
    """
    if b.ndim != 2 or a.shape[-1] != b.shape[0]:  # noqa: PLR2004
        raise DimensionError(f"Cannot multiply {a.shape} by {b.shape}")
    return ensure_finite(a @ b, "matmul")


def matmul_backward(a: Tensor, b: Tensor, dout: Tensor) -> tuple[Tensor, Tensor]:
    """Gradients of ``a @ b`` with respect to ``a`` and ``b``."""
    if dout.shape != (*a.shape[:-1], b.shape[1]):
        raise DimensionError(
            f"Upstream gradient {dout.shape} does not match {a.shape} @ {b.shape}"
        )
    da = dout @ b.T
    db = a.reshape(-1, a.shape[-1]).T @ dout.reshape(-1, b.shape[1])
    return da, db


def sigmoid(x: Tensor) -> Tensor:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return ensure_finite(out, "sigmoid")


def sigmoid_backward(y: Tensor, dout: Tensor) -> Tensor:
    """Backward of sigmoid given its output ``y``."""
    return dout * y * (1.0 - y)


def tanh(x: Tensor) -> Tensor:
    return ensure_finite(np.tanh(x), "tanh")


def tanh_backward(y: Tensor, dout: Tensor) -> Tensor:
    """Backward of tanh given its output ``y``."""
    return dout * (1.0 - y * y)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis."""
    shifted = x - x.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ensure_finite(ex / ex.sum(axis=-1, keepdims=True), "softmax")


def log_softmax(x: Tensor) -> Tensor:
    """Numerically stable log of :func:`softmax`."""
    shifted = x - x.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return ensure_finite(shifted - lse, "log_softmax")


def softmax_backward(y: Tensor, dout: Tensor) -> Tensor:
    """Backward of softmax given its output ``y``."""
    return y * (dout - (y * dout).sum(axis=-1, keepdims=True))


def maxout2(x: Tensor) -> Tensor:
    """Pairwise max over adjacent units: ``[..., 2k] -> [..., k]``.

    Raises:
        DimensionError: If the last extent is odd.
    """
    if x.shape[-1] % 2:
        raise DimensionError(f"maxout2 needs an even last extent, got {x.shape}")
    return x.reshape(*x.shape[:-1], -1, 2).max(axis=-1)


def maxout2_backward(x: Tensor, dout: Tensor) -> Tensor:
    """Route ``dout`` to the winning unit of each pair (first unit on ties)."""
    pairs = x.reshape(*x.shape[:-1], -1, 2)
    winner = pairs.argmax(axis=-1)
    dx = np.zeros_like(pairs)
    np.put_along_axis(dx, winner[..., None], dout[..., None], axis=-1)
    return dx.reshape(x.shape)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"Hadamard product of {a.shape} and {b.shape}")
    return ensure_finite(a * b, "hadamard")


def hadamard_backward(a: Tensor, b: Tensor, dout: Tensor) -> tuple[Tensor, Tensor]:
    return dout * b, dout * a


def numeric_gradient(
    f: Callable[[], float], x: Tensor, h: float = 1e-5
) -> Tensor:
    """Central finite-difference gradient of ``f`` with respect to ``x``.

    ``x`` is perturbed in place and restored; ``f`` must read it.
    """
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus = f()
        flat[i] = orig - h
        minus = f()
        flat[i] = orig
        gflat[i] = (plus - minus) / (2.0 * h)
    return grad

"""Named parameter storage with gradients and ADAM moments."""

import hashlib
from collections.abc import Iterator

import numpy as np

from ..exceptions import DimensionError, UsageError
from .tensor import Tensor, as_tensor, zeros


class ParamStore:
    """Ordered map of trainable tensors θ with same-shaped gradient buffers.

    Insertion order is the canonical order for checkpoints and hashing.
    Gradients accumulate additively (BPTT sums over timesteps); callers zero
    them between minibatches, which :func:`adam_step` does after updating.
    """

    def __init__(self) -> None:
        self.params: dict[str, Tensor] = {}
        self.grads: dict[str, Tensor] = {}
        self.first_moment: dict[str, Tensor] = {}
        self.second_moment: dict[str, Tensor] = {}
        self.step = 0

    def add(self, name: str, value: Tensor) -> Tensor:
        """Register a parameter with zeroed gradient and moments."""
        if name in self.params:
            raise UsageError(f"Parameter already registered: {name}")
        tensor = as_tensor(value)
        self.params[name] = tensor
        self.grads[name] = zeros(tensor.shape)
        self.first_moment[name] = zeros(tensor.shape)
        self.second_moment[name] = zeros(tensor.shape)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: object) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def accumulate(self, name: str, grad: Tensor) -> None:
        """Add ``grad`` into the gradient buffer of ``name``."""
        buf = self.grads[name]
        if grad.shape != buf.shape:
            raise DimensionError(
                f"Gradient for {name} has shape {grad.shape}, expected {buf.shape}"
            )
        buf += grad

    def zero_grad(self) -> None:
        for buf in self.grads.values():
            buf.fill(0.0)

    def scale_grad(self, factor: float) -> None:
        for buf in self.grads.values():
            buf *= factor

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def fingerprint(self) -> str:
        """SHA-256 over names and parameter bytes in canonical order."""
        digest = hashlib.sha256()
        for name, value in self.params.items():
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
        return digest.hexdigest()

    def copy(self) -> "ParamStore":
        """Deep copy of parameters, gradients and optimizer state."""
        clone = ParamStore()
        for name, value in self.params.items():
            clone.params[name] = value.copy()
            clone.grads[name] = self.grads[name].copy()
            clone.first_moment[name] = self.first_moment[name].copy()
            clone.second_moment[name] = self.second_moment[name].copy()
        clone.step = self.step
        return clone

    def reset_optimizer(self) -> None:
        """Zero the ADAM moments and step counter (fresh optimizer)."""
        for name in self.params:
            self.first_moment[name].fill(0.0)
            self.second_moment[name].fill(0.0)
        self.step = 0

"""
Feed-forward weight network
===========================

One hidden sigmoid layer mapping a standardized state vector to portfolio
weights, with exact backpropagation.

- ``lagrangian`` mode: N sigmoid outputs, one weight per asset; the budget
  constraint is left to the multiplier term of the training objective.
- ``complement`` mode (N = 2 only): a single sigmoid output x, weights
  ``[x, 1 - x]``.

Functions accept a single state vector (M,) or a batch (T, M); backward sums
parameter gradients over the batch.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.special import expit

from ..utils.seeding import make_rng
from .errors import ConfigError


logger = logging.getLogger(__name__)


class OutputMode(str, Enum):
    LAGRANGIAN = "lagrangian"
    COMPLEMENT = "complement"


@dataclass(frozen=True)
class NetworkShape:
    """Layer sizes: M inputs, H hidden nodes, one output per asset (or one in complement mode)."""

    inputs: int
    hidden: int
    n_assets: int = 2
    output_mode: OutputMode = OutputMode.LAGRANGIAN

    def __post_init__(self) -> None:
        object.__setattr__(self, "output_mode", OutputMode(self.output_mode))
        if self.inputs < 1 or self.hidden < 1:
            raise ConfigError(f"Network needs at least one input and one hidden node, got M={self.inputs}, H={self.hidden}.")
        if self.n_assets < 2:
            raise ConfigError("Network needs at least two assets.")
        if self.output_mode is OutputMode.COMPLEMENT and self.n_assets != 2:
            raise ConfigError("Complement output mode requires exactly two assets.")

    @property
    def outputs(self) -> int:
        """Number of output nodes N_out."""
        return 1 if self.output_mode is OutputMode.COMPLEMENT else self.n_assets

    def with_hidden(self, hidden: int) -> "NetworkShape":
        return replace(self, hidden=hidden)

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "hidden": self.hidden,
            "n_assets": self.n_assets,
            "output_mode": self.output_mode.value,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NetworkShape":
        return cls(
            inputs=payload["inputs"],
            hidden=payload["hidden"],
            n_assets=payload["n_assets"],
            output_mode=OutputMode(payload["output_mode"]),
        )


@dataclass(frozen=True)
class NetworkParams:
    """Network weights plus the scalar Lagrangian multiplier ``mu``."""

    shape: NetworkShape
    w_in: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    mu: float = 0.0

    def __post_init__(self) -> None:
        s = self.shape
        expected = {
            "w_in": (s.hidden, s.inputs),
            "b_hidden": (s.hidden,),
            "w_out": (s.outputs, s.hidden),
            "b_out": (s.outputs,),
        }
        for name, dims in expected.items():
            value = np.asarray(getattr(self, name), dtype=float)
            if value.shape != dims:
                raise ConfigError(f"{name} has shape {value.shape}, expected {dims}.")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "mu", float(self.mu))

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.mu)
            and all(np.all(np.isfinite(a)) for a in (self.w_in, self.b_hidden, self.w_out, self.b_out))
        )

    def ascend(self, grads: "ParamGradients", rate: float, mu_sign: float = 1.0) -> "NetworkParams":
        """Return ``params + rate * grads``; ``mu_sign = -1`` descends on mu."""
        return NetworkParams(
            shape=self.shape,
            w_in=self.w_in + rate * grads.w_in,
            b_hidden=self.b_hidden + rate * grads.b_hidden,
            w_out=self.w_out + rate * grads.w_out,
            b_out=self.b_out + rate * grads.b_out,
            mu=self.mu + mu_sign * rate * grads.mu,
        )

    def to_vector(self) -> np.ndarray:
        """All parameters flattened row-major, ``mu`` last."""
        return np.concatenate(
            [self.w_in.ravel(), self.b_hidden, self.w_out.ravel(), self.b_out, [self.mu]]
        )

    @classmethod
    def from_vector(cls, shape: NetworkShape, vector: np.ndarray) -> "NetworkParams":
        vector = np.asarray(vector, dtype=float)
        sizes = [shape.hidden * shape.inputs, shape.hidden, shape.outputs * shape.hidden, shape.outputs]
        if vector.size != sum(sizes) + 1:
            raise ConfigError("Parameter vector length does not match the network shape.")
        parts = np.split(vector[:-1], np.cumsum(sizes)[:-1])
        return cls(
            shape=shape,
            w_in=parts[0].reshape(shape.hidden, shape.inputs),
            b_hidden=parts[1],
            w_out=parts[2].reshape(shape.outputs, shape.hidden),
            b_out=parts[3],
            mu=float(vector[-1]),
        )

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.to_dict(),
            "w_in": self.w_in.ravel().tolist(),
            "b_hidden": self.b_hidden.tolist(),
            "w_out": self.w_out.ravel().tolist(),
            "b_out": self.b_out.tolist(),
            "mu": self.mu,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NetworkParams":
        shape = NetworkShape.from_dict(payload["shape"])
        return cls(
            shape=shape,
            w_in=np.array(payload["w_in"], dtype=float).reshape(shape.hidden, shape.inputs),
            b_hidden=np.array(payload["b_hidden"], dtype=float),
            w_out=np.array(payload["w_out"], dtype=float).reshape(shape.outputs, shape.hidden),
            b_out=np.array(payload["b_out"], dtype=float),
            mu=payload["mu"],
        )


@dataclass(frozen=True)
class ParamGradients:
    """Gradients with the shapes of ``NetworkParams``; ``mu`` is d/d(mu)."""

    w_in: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    mu: float = 0.0

    def scaled(self, factor: float) -> "ParamGradients":
        return ParamGradients(
            w_in=self.w_in * factor,
            b_hidden=self.b_hidden * factor,
            w_out=self.w_out * factor,
            b_out=self.b_out * factor,
            mu=self.mu * factor,
        )

    def with_mu(self, d_mu: float) -> "ParamGradients":
        return replace(self, mu=float(d_mu))

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.w_in.ravel(), self.b_hidden, self.w_out.ravel(), self.b_out, [self.mu]]
        )


@dataclass
class _ForwardCache:
    z: np.ndarray
    hidden: np.ndarray
    raw: np.ndarray
    weights: np.ndarray = field(repr=False)


def init(shape: NetworkShape, seed: int) -> NetworkParams:
    """Random initial parameters.

    Weights are uniform on ±1/sqrt(fan_in) per layer; biases and ``mu`` are 0.
    Identical seeds give identical parameters.
    """
    rng = make_rng(seed)
    bound_in = 1.0 / np.sqrt(shape.inputs)
    bound_out = 1.0 / np.sqrt(shape.hidden)
    return NetworkParams(
        shape=shape,
        w_in=rng.uniform(-bound_in, bound_in, size=(shape.hidden, shape.inputs)),
        b_hidden=np.zeros(shape.hidden),
        w_out=rng.uniform(-bound_out, bound_out, size=(shape.outputs, shape.hidden)),
        b_out=np.zeros(shape.outputs),
        mu=0.0,
    )


def _forward(params: NetworkParams, z: np.ndarray) -> _ForwardCache:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    hidden = expit(z @ params.w_in.T + params.b_hidden)
    raw = expit(hidden @ params.w_out.T + params.b_out)
    if params.shape.output_mode is OutputMode.COMPLEMENT:
        weights = np.column_stack([raw[:, 0], 1.0 - raw[:, 0]])
    else:
        weights = raw
    return _ForwardCache(z=z, hidden=hidden, raw=raw, weights=weights)


def forward(params: NetworkParams, z: np.ndarray) -> np.ndarray:
    """Portfolio weights for one state vector (M,) or a batch (T, M).

    hidden = sigmoid(w_in z + b_hidden); raw = sigmoid(w_out hidden + b_out).
    Lagrangian mode returns ``raw``; complement mode ``[raw_1, 1 - raw_1]``.
    """
    cache = _forward(params, z)
    return cache.weights[0] if np.ndim(z) == 1 else cache.weights


def backward(params: NetworkParams, z: np.ndarray, upstream: np.ndarray) -> ParamGradients:
    """Gradients of L with respect to every network parameter.

    Parameters
    ----------
    params : NetworkParams
    z : np.ndarray
        State vector (M,) or batch (T, M).
    upstream : np.ndarray
        dL/dx with the shape of ``forward(params, z)``.

    Returns
    -------
    ParamGradients
        Summed over the batch; ``mu`` is 0 (the multiplier enters L outside
        the network and is filled in by the caller).
    """
    cache = _forward(params, z)
    upstream = np.atleast_2d(np.asarray(upstream, dtype=float))
    if params.shape.output_mode is OutputMode.COMPLEMENT:
        # x = [y, 1 - y]: the complement asset's upstream enters negated
        d_raw = (upstream[:, 0] - upstream[:, 1])[:, None]
    else:
        d_raw = upstream

    d_out = d_raw * cache.raw * (1.0 - cache.raw)
    d_hidden = (d_out @ params.w_out) * cache.hidden * (1.0 - cache.hidden)
    return ParamGradients(
        w_in=d_hidden.T @ cache.z,
        b_hidden=d_hidden.sum(axis=0),
        w_out=d_out.T @ cache.hidden,
        b_out=d_out.sum(axis=0),
        mu=0.0,
    )


__all__ = [
    "OutputMode",
    "NetworkShape",
    "NetworkParams",
    "ParamGradients",
    "init",
    "forward",
    "backward",
]

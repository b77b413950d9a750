"""Inference-only recurrent policy network.

Architecture: a single LSTM layer embedding the observation (no extra
activation after the cell output), a stack of ReLU dense layers, and a
linear head emitting mean and log-std per action channel. Actions are
squashed with tanh and scaled to the velocity limits; log-std is clamped
to [-20, 2].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0


@dataclass(frozen=True)
class PolicyNetworkSpec:
    """Shapes of the recurrent policy network."""

    observation_size: int
    embedder_width: int  # LSTM units
    hidden_layers: tuple[int, ...]
    n_devices: int

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))
        if self.observation_size <= 0 or self.embedder_width <= 0 or self.n_devices <= 0:
            raise InvalidInputError("network sizes must be positive")
        if any(wd <= 0 for wd in self.hidden_layers):
            raise InvalidInputError("hidden widths must be positive")

    @property
    def output_size(self) -> int:
        return 2 * self.action_size

    @property
    def action_size(self) -> int:
        return 2 * self.n_devices

    def layer_shapes(self) -> dict[str, tuple[int, ...]]:
        """Declared parameter shapes, gate order (input, forget, cell, output)."""
        h, d = self.embedder_width, self.observation_size
        shapes = {
            "lstm.W": (4 * h, d),
            "lstm.U": (4 * h, h),
            "lstm.b": (4 * h,),
        }
        prev = h
        for i, width in enumerate(self.hidden_layers):
            shapes[f"dense{i}.W"] = (width, prev)
            shapes[f"dense{i}.b"] = (width,)
            prev = width
        shapes["head.W"] = (self.output_size, prev)
        shapes["head.b"] = (self.output_size,)
        return shapes


@dataclass
class RecurrentState:
    """LSTM hidden and cell state owned by the caller, one per episode."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, width: int) -> "RecurrentState":
        return cls(h=np.zeros(width), c=np.zeros(width))

    def copy(self) -> "RecurrentState":
        return RecurrentState(h=self.h.copy(), c=self.c.copy())


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def lstm_cell(weights: dict, x: np.ndarray, state: RecurrentState):
    """Standard LSTM cell: sigmoid gates, tanh candidate and cell output."""
    W, U, b = weights["lstm.W"], weights["lstm.U"], weights["lstm.b"]
    h = W.shape[0] // 4
    z = W @ x + U @ state.h + b
    i = _sigmoid(z[0:h])
    f = _sigmoid(z[h : 2 * h])
    g = np.tanh(z[2 * h : 3 * h])
    o = _sigmoid(z[3 * h : 4 * h])
    c_new = f * state.c + i * g
    h_new = o * np.tanh(c_new)
    return h_new, RecurrentState(h=h_new, c=c_new)


def neural_forward(
    spec: PolicyNetworkSpec,
    weights: dict,
    observation: np.ndarray,
    state: RecurrentState | None = None,
):
    """Run the network one step.

    Returns (mean, std, new_state); mean/std have one entry per action
    channel. The caller squashes and scales to velocities.
    """
    obs = np.asarray(observation, dtype=np.float64).reshape(-1)
    if obs.shape[0] != spec.observation_size:
        raise InvalidInputError(
            f"observation size {obs.shape[0]} != declared {spec.observation_size}"
        )
    _check_shapes(spec, weights)
    if state is None:
        state = RecurrentState.zeros(spec.embedder_width)
    h, new_state = lstm_cell(weights, obs, state)
    a = h
    for idx in range(len(spec.hidden_layers)):
        a = weights[f"dense{idx}.W"] @ a + weights[f"dense{idx}.b"]
        a = np.maximum(a, 0.0)
    out = weights["head.W"] @ a + weights["head.b"]
    k = spec.action_size
    mean = out[:k]
    log_std = np.clip(out[k:], LOG_STD_MIN, LOG_STD_MAX)
    return mean, np.exp(log_std), new_state


def _check_shapes(spec: PolicyNetworkSpec, weights: dict) -> None:
    for name, shape in spec.layer_shapes().items():
        if name not in weights:
            raise InvalidInputError(f"missing weight tensor {name!r}")
        got = np.asarray(weights[name]).shape
        if got != shape:
            raise InvalidInputError(f"weight {name!r} has shape {got}, expected {shape}")
        if not np.all(np.isfinite(weights[name])):
            raise InvalidInputError(f"weight {name!r} contains non-finite values")


def zero_weights(spec: PolicyNetworkSpec) -> dict:
    return {name: np.zeros(shape) for name, shape in spec.layer_shapes().items()}


def random_weights(spec: PolicyNetworkSpec, rng_seed: int, scale: float = 0.1) -> dict:
    rng = np.random.default_rng(rng_seed)
    return {
        name: scale * rng.standard_normal(shape) for name, shape in spec.layer_shapes().items()
    }

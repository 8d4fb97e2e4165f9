"""Neural building blocks over the tensor core.

Named parameters, linear layers, multi-head attention, the cosine-annealed
plain-gradient optimizer, and the JSON checkpoint format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StateError
from .tensor import Tensor, concat, matmul, softmax, transpose


class ParameterSet:
    """Named map of trainable tensors; enumeration is always lexicographic."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ConfigError(f"duplicate parameter name: {name}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self):
        return sorted(self._params)

    def items(self):
        return [(n, self._params[n]) for n in self.names()]

    def tensors(self):
        return [self._params[n] for n in self.names()]

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def add_linear(ps: ParameterSet, name: str, fan_in: int, fan_out: int,
               rng: np.random.Generator, bias: bool = True) -> None:
    ps.add(f"{name}.W", uniform_init(rng, fan_in, (fan_in, fan_out)))
    if bias:
        ps.add(f"{name}.b", uniform_init(rng, fan_in, (fan_out,)))


def linear(ps: ParameterSet, name: str, x: Tensor) -> Tensor:
    out = matmul(x, ps[f"{name}.W"])
    if f"{name}.b" in ps:
        out = out + ps[f"{name}.b"]
    return out


def add_mha(ps: ParameterSet, name: str, d: int, heads: int,
            rng: np.random.Generator) -> None:
    if d % heads != 0:
        raise ConfigError(f"model width {d} is not divisible by {heads} heads")
    for proj in ("Wq", "Wk", "Wv", "Wo"):
        ps.add(f"{name}.{proj}", uniform_init(rng, d, (d, d)))


def multi_head_attention(ps: ParameterSet, name: str, Q: Tensor, K: Tensor,
                         V: Tensor, heads: int):
    """Projected scaled dot-product attention; returns (output, head weights).

    Q is (q, d); K and V are (s, d) with s >= 1. Head h attends with the
    columns [h*dh, (h+1)*dh) of the shared d x d projections; outputs are
    concatenated and passed through the output projection.
    """
    d = Q.shape[-1]
    if d % heads != 0:
        raise ConfigError(f"model width {d} is not divisible by {heads} heads")
    dh = d // heads
    scale = 1.0 / math.sqrt(dh)

    q_all = matmul(Q, ps[f"{name}.Wq"])
    k_all = matmul(K, ps[f"{name}.Wk"])
    v_all = matmul(V, ps[f"{name}.Wv"])

    outputs = []
    weights = []
    for h in range(heads):
        cols = slice(h * dh, (h + 1) * dh)
        qh = q_all[:, cols]
        kh = k_all[:, cols]
        vh = v_all[:, cols]
        scores = matmul(qh, transpose(kh)) * scale
        w = softmax(scores, axis=-1)
        outputs.append(matmul(w, vh))
        weights.append(w)
    return matmul(concat(outputs, axis=-1), ps[f"{name}.Wo"]), weights


# optimizer ----------------------------------------------------------------

@dataclass
class OptimizerConfig:
    base_learning_rate: float = 2e-5
    total_steps: int = 1000
    batch_size: int = 16
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.base_learning_rate <= 0:
            raise ConfigError("base_learning_rate must be positive")
        if self.total_steps <= 0:
            raise ConfigError("total_steps must be positive")
        if self.batch_size <= 0:
            raise ConfigError("batch_size must be positive")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigError("dropout_rate must be in [0, 1)")

    def lr_at(self, step: int) -> float:
        return cosine_lr(self.base_learning_rate, step, self.total_steps)


def cosine_lr(base: float, step: int, total_steps: int) -> float:
    """Cosine annealing from base at step 0 to 0 at total_steps."""
    t = min(max(step, 0), total_steps)
    return base * 0.5 * (1.0 + math.cos(math.pi * t / total_steps))


def sgd_step(params: ParameterSet, lr: float, names=None) -> None:
    """Plain gradient-descent step; grads of stepped parameters are zeroed.

    Ascent-vs-descent sign is the caller's job via loss construction.
    """
    selected = params.items() if names is None else [(n, params[n]) for n in sorted(names)]
    for name, t in selected:
        if t.grad is None:
            raise StateError(f"optimizer_step: parameter {name} has no gradient")
    for _, t in selected:
        t.data -= lr * t.grad
        t.grad = None


def optimizer_step(params: ParameterSet, config: OptimizerConfig, step: int) -> None:
    sgd_step(params, config.lr_at(step))


# checkpoints ----------------------------------------------------------------

CHECKPOINT_FORMAT_VERSION = 1


def _fmt_float(x: float) -> str:
    # 17 significant decimal digits round-trip any finite float64 exactly.
    return format(x, ".17g")


def save_checkpoint(path, step: int, params: ParameterSet) -> None:
    entries = []
    for name, t in params.items():
        shape = json.dumps(list(t.data.shape))
        data = "[" + ", ".join(_fmt_float(v) for v in t.data.ravel()) + "]"
        entries.append(f'{json.dumps(name)}: {{"shape": {shape}, "data": {data}}}')
    doc = ('{"format_version": %d, "step": %d, "params": {%s}}'
           % (CHECKPOINT_FORMAT_VERSION, step, ", ".join(entries)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc)


def load_checkpoint(path):
    """Returns (step, {name: float64 array})."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ConfigError(f"unsupported checkpoint format_version in {path}")
    arrays = {}
    for name, entry in doc["params"].items():
        arrays[name] = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    return int(doc["step"]), arrays


def apply_checkpoint(params: ParameterSet, arrays: dict) -> None:
    """Load arrays into an existing parameter set; shapes must match exactly."""
    names = set(params.names())
    saved = set(arrays)
    if names != saved:
        missing = sorted(names ^ saved)[0]
        raise ConfigError(f"checkpoint does not match model: mismatch at {missing}")
    for name, t in params.items():
        arr = arrays[name]
        if tuple(arr.shape) != tuple(t.data.shape):
            raise ConfigError(
                f"checkpoint shape mismatch for {name}: "
                f"{list(arr.shape)} vs expected {list(t.data.shape)}")
        t.data = arr.copy()
        t.grad = None

"""Minimal dense-network core: forward/backward passes, the scalar
dimension-expansion front end, Adam, soft target updates, and weight files.

Everything is plain numpy, batch-first, float64. Networks here are tiny
(<= ~1e5 parameters), so clarity beats throughput.
"""

from __future__ import annotations

import json

import numpy as np

TANH = "tanh"
LINEAR = "linear"

WEIGHTS_FORMAT_VERSION = 1

# How many trailing observation scalars get expanded (distance, speed, energy).
N_EXPANDED_SCALARS = 3


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _as_batch(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


class Mlp:
    """Fully connected net: ReLU hidden layers, tanh or linear output."""

    def __init__(self, dims, output_activation: str = LINEAR,
                 rng: np.random.Generator | None = None):
        if len(dims) < 2:
            raise ValueError("need at least input and output dims")
        if output_activation not in (TANH, LINEAR):
            raise ValueError(f"unknown output activation {output_activation!r}")
        rng = rng or np.random.default_rng()
        self.dims = list(dims)
        self.output_activation = output_activation
        self.weights = [glorot_uniform(rng, dims[i], dims[i + 1])
                        for i in range(len(dims) - 1)]
        self.biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def set_params(self, arrays) -> None:
        expected = self.params
        if len(arrays) != len(expected):
            raise ValueError(f"expected {len(expected)} arrays, got {len(arrays)}")
        for i, (w, b) in enumerate(zip(arrays[0::2], arrays[1::2])):
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ValueError(f"shape mismatch at layer {i}")
            self.weights[i][...] = w
            self.biases[i][...] = b

    def forward(self, x):
        """Returns (output, cache); cache feeds backward()."""
        x, squeeze = _as_batch(x)
        if x.shape[1] != self.dims[0]:
            raise ValueError(f"input dim {x.shape[1]}, expected {self.dims[0]}")
        inputs, pres = [], []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            pres.append(z)
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.output_activation == TANH:
                h = np.tanh(z)
            else:
                h = z
        cache = (inputs, pres, h)
        return (h[0] if squeeze else h), cache

    def backward(self, cache, output_grad):
        """Exact reverse-mode gradients. Returns (param grads, input grad)."""
        inputs, pres, out = cache
        dy, squeeze = _as_batch(output_grad)
        last = len(self.weights) - 1
        if self.output_activation == TANH:
            dz = dy * (1.0 - out * out)
        else:
            dz = dy
        grads = [None] * (2 * len(self.weights))
        for i in range(last, -1, -1):
            grads[2 * i] = inputs[i].T @ dz
            grads[2 * i + 1] = dz.sum(axis=0)
            dx = dz @ self.weights[i].T
            if i > 0:
                dz = dx * (pres[i - 1] > 0.0)
        return grads, (dx[0] if squeeze else dx)


class ScalarExpansion:
    """Trainable widening of the trailing observation scalars.

    Each of the last N_EXPANDED_SCALARS entries is mapped 1 -> width by its
    own affine map plus ReLU, so single scalars are not drowned by the
    position block. The leading entries pass through untouched.
    """

    def __init__(self, obs_dim: int, width: int = 2,
                 rng: np.random.Generator | None = None):
        if obs_dim < N_EXPANDED_SCALARS:
            raise ValueError(f"observation dim {obs_dim} too short to expand")
        rng = rng or np.random.default_rng()
        self.obs_dim = obs_dim
        self.width = width
        n = N_EXPANDED_SCALARS
        limit = np.sqrt(6.0 / (1 + width))
        self.w = rng.uniform(-limit, limit, size=(n, width))
        self.b = np.zeros((n, width))

    @property
    def out_dim(self) -> int:
        return self.obs_dim - N_EXPANDED_SCALARS + N_EXPANDED_SCALARS * self.width

    @property
    def params(self) -> list[np.ndarray]:
        return [self.w, self.b]

    def forward(self, x):
        x, squeeze = _as_batch(x)
        if x.shape[1] != self.obs_dim:
            raise ValueError(f"input dim {x.shape[1]}, expected {self.obs_dim}")
        n = N_EXPANDED_SCALARS
        head, tail = x[:, :-n], x[:, -n:]
        pre = tail[:, :, None] * self.w[None] + self.b[None]   # (batch, n, width)
        act = np.maximum(pre, 0.0)
        out = np.concatenate([head, act.reshape(len(x), -1)], axis=1)
        cache = (tail, pre, squeeze)
        return (out[0] if squeeze else out), cache

    def backward(self, cache, output_grad):
        tail, pre, squeeze = cache
        dy, _ = _as_batch(output_grad)
        n = N_EXPANDED_SCALARS
        head_len = self.obs_dim - n
        dhead = dy[:, :head_len]
        dact = dy[:, head_len:].reshape(len(dy), n, self.width)
        dpre = dact * (pre > 0.0)
        dw = (tail[:, :, None] * dpre).sum(axis=0)
        db = dpre.sum(axis=0)
        dtail = (dpre * self.w[None]).sum(axis=2)
        dx = np.concatenate([dhead, dtail], axis=1)
        return [dw, db], (dx[0] if squeeze else dx)


class ExpandedMlp:
    """An Mlp fed by per-block scalar expansions plus optional raw actions.

    Actors use one observation block and no action input; centralized critics
    take every agent's observation block (each with its own expansion
    parameters) followed by the joint raw actions.
    """

    def __init__(self, obs_dims, action_dim: int, hidden_dims, out_dim: int,
                 output_activation: str, expand_width: int = 2,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng()
        self.obs_dims = list(obs_dims)
        self.action_dim = action_dim
        self.expansions = [ScalarExpansion(d, expand_width, rng) for d in obs_dims]
        in_dim = sum(e.out_dim for e in self.expansions) + action_dim
        self.mlp = Mlp([in_dim] + list(hidden_dims) + [out_dim],
                       output_activation, rng)

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for e in self.expansions:
            out += e.params
        return out + self.mlp.params

    def set_params(self, arrays) -> None:
        if len(arrays) != len(self.params):
            raise ValueError(f"expected {len(self.params)} arrays, got {len(arrays)}")
        i = 0
        for e in self.expansions:
            for own, new in zip(e.params, arrays[i:i + 2]):
                if own.shape != new.shape:
                    raise ValueError("expansion shape mismatch")
                own[...] = new
            i += 2
        self.mlp.set_params(arrays[i:])

    def forward(self, obs_concat, actions=None):
        obs, squeeze = _as_batch(obs_concat)
        if obs.shape[1] != sum(self.obs_dims):
            raise ValueError(
                f"observation dim {obs.shape[1]}, expected {sum(self.obs_dims)}")
        pieces, caches = [], []
        off = 0
        for e in self.expansions:
            y, c = e.forward(obs[:, off:off + e.obs_dim])
            pieces.append(y)
            caches.append(c)
            off += e.obs_dim
        if self.action_dim:
            acts, _ = _as_batch(actions)
            if acts.shape[1] != self.action_dim:
                raise ValueError(
                    f"action dim {acts.shape[1]}, expected {self.action_dim}")
            pieces.append(acts)
        x = np.concatenate(pieces, axis=1)
        y, mcache = self.mlp.forward(x)
        if squeeze and y.ndim == 2:
            y = y[0]
        return y, (caches, mcache, squeeze)

    def backward(self, cache, output_grad):
        """Returns (param grads, (obs grad, action grad))."""
        caches, mcache, squeeze = cache
        mlp_grads, dx = self.mlp.backward(mcache, output_grad)
        dx, _ = _as_batch(dx)
        grads = []
        obs_grads = []
        off = 0
        for e, c in zip(self.expansions, caches):
            g, dobs = e.backward(c, dx[:, off:off + e.out_dim])
            grads += g
            obs_grads.append(np.atleast_2d(dobs))
            off += e.out_dim
        dact = dx[:, off:off + self.action_dim] if self.action_dim else None
        dobs_all = np.concatenate(obs_grads, axis=1)
        if squeeze:
            dobs_all = dobs_all[0]
            dact = None if dact is None else dact[0]
        return grads + mlp_grads, (dobs_all, dact)


class Adam:
    """Bias-corrected Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads) -> None:
        if len(params) != len(self.m):
            raise ValueError("parameter count changed under the optimizer")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def soft_update(target_params, online_params, tau: float) -> None:
    """Blend target weights toward online weights: t <- tau*o + (1-tau)*t."""
    if len(target_params) != len(online_params):
        raise ValueError("architecture mismatch between target and online nets")
    for t, o in zip(target_params, online_params):
        if t.shape != o.shape:
            raise ValueError("architecture mismatch between target and online nets")
        t *= 1.0 - tau
        t += tau * o


def save_params(path, params, meta: dict | None = None) -> None:
    """Write a parameter list to an .npz container with a format version."""
    payload = {f"p{i:03d}": p for i, p in enumerate(params)}
    payload["format_version"] = np.array(WEIGHTS_FORMAT_VERSION)
    payload["n_params"] = np.array(len(params))
    payload["meta_json"] = np.array(json.dumps(meta or {}))
    np.savez(path, **payload)


def load_params(path) -> tuple[list[np.ndarray], dict]:
    """Read a parameter list written by save_params."""
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != WEIGHTS_FORMAT_VERSION:
            raise ValueError(f"unsupported weights format version {version}")
        n = int(data["n_params"])
        params = [data[f"p{i:03d}"].copy() for i in range(n)]
        meta = json.loads(str(data["meta_json"]))
    return params, meta

"""A small tape-based automatic-differentiation engine for MLP policies.

The tape records numpy-valued nodes (batched along the leading axis where that
makes sense).  ``Tape.backward`` runs reverse mode from a scalar node;
``Tape.jvp`` pushes a parameter tangent forward through the recorded graph,
which gives directional derivatives of every node (e.g. one per sampled step)
in a single pass.  Both are first order only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .game import ContractError, NumericError


@dataclass
class Node:
    id: int
    op: str
    parents: tuple[int, ...]
    value: np.ndarray
    vjp: Callable | None = None
    jvp: Callable | None = None

    @property
    def shape(self):
        return self.value.shape


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _tsum(*terms):
    terms = [t for t in terms if t is not None]
    if not terms:
        return None
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


class Tape:
    """Append-only record of primitive operations.

    ``n_params`` is the length of the flat parameter vector that gradients are
    reported against; :meth:`param` binds a slice of it as a leaf.
    """

    def __init__(self, n_params: int = 0):
        self.n_params = int(n_params)
        self.nodes: list[Node] = []
        self.leaves: dict[int, tuple[int, int]] = {}

    def _push(self, op, parents, value, vjp=None, jvp=None) -> Node:
        value = np.asarray(value, dtype=np.float64)
        node = Node(len(self.nodes), op, tuple(p.id for p in parents), value, vjp, jvp)
        if not np.all(np.isfinite(value)):
            raise NumericError(f"node {node.id} ({op}) produced a non-finite value")
        self.nodes.append(node)
        return node

    # leaves

    def param(self, values, offset: int = 0) -> Node:
        values = np.asarray(values, dtype=np.float64).ravel()
        if offset < 0 or offset + values.size > self.n_params:
            raise ContractError(
                f"parameter leaf [{offset}, {offset + values.size}) outside vector of {self.n_params}"
            )
        node = self._push("param", (), values.copy())
        self.leaves[node.id] = (offset, values.size)
        return node

    def const(self, value) -> Node:
        return self._push("const", (), value)

    def _lift(self, x) -> Node:
        return x if isinstance(x, Node) else self.const(x)

    # elementwise arithmetic

    def add(self, a, b) -> Node:
        a, b = self._lift(a), self._lift(b)
        sa, sb = a.shape, b.shape
        return self._push(
            "add", (a, b), a.value + b.value,
            lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
            lambda ta, tb: _tsum(ta, tb),
        )

    def sub(self, a, b) -> Node:
        a, b = self._lift(a), self._lift(b)
        sa, sb = a.shape, b.shape
        return self._push(
            "sub", (a, b), a.value - b.value,
            lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)),
            lambda ta, tb: _tsum(ta, None if tb is None else -tb),
        )

    def mul(self, a, b) -> Node:
        a, b = self._lift(a), self._lift(b)
        va, vb = a.value, b.value
        return self._push(
            "mul", (a, b), va * vb,
            lambda g: (_unbroadcast(g * vb, va.shape), _unbroadcast(g * va, vb.shape)),
            lambda ta, tb: _tsum(None if ta is None else ta * vb, None if tb is None else va * tb),
        )

    def scale(self, a: Node, c: float) -> Node:
        return self._push("scale", (a,), c * a.value, lambda g: (c * g,),
                          lambda ta: None if ta is None else c * ta)

    def matmul(self, x, W) -> Node:
        """``x @ W`` for x of shape (in,) or (B, in) and W of shape (in, out)."""
        x, W = self._lift(x), self._lift(W)
        vx, vW = x.value, W.value
        if vW.ndim != 2 or vx.shape[-1] != vW.shape[0]:
            raise ContractError(f"matmul shape mismatch {vx.shape} @ {vW.shape}")

        def vjp(g):
            gx = g @ vW.T
            gW = np.outer(vx, g) if vx.ndim == 1 else vx.T @ g
            return gx, gW

        def jvp(tx, tW):
            return _tsum(None if tx is None else tx @ vW, None if tW is None else vx @ tW)

        return self._push("matmul", (x, W), vx @ vW, vjp, jvp)

    # nonlinearities

    def tanh(self, a: Node) -> Node:
        y = np.tanh(a.value)
        d = 1.0 - y * y
        return self._push("tanh", (a,), y, lambda g: (g * d,), lambda t: None if t is None else t * d)

    def relu(self, a: Node) -> Node:
        mask = (a.value > 0).astype(np.float64)
        return self._push("relu", (a,), a.value * mask, lambda g: (g * mask,),
                          lambda t: None if t is None else t * mask)

    def log(self, a: Node) -> Node:
        va = a.value
        if np.any(va <= 0):
            raise NumericError(f"log of non-positive value at node {a.id}")
        return self._push("log", (a,), np.log(va), lambda g: (g / va,),
                          lambda t: None if t is None else t / va)

    def exp(self, a: Node) -> Node:
        y = np.exp(a.value)
        return self._push("exp", (a,), y, lambda g: (g * y,), lambda t: None if t is None else t * y)

    # reductions and indexing

    def sum(self, a: Node, axis: int | None = None) -> Node:
        shape = a.shape

        def vjp(g):
            if axis is None:
                return (np.broadcast_to(g, shape).copy(),)
            return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

        return self._push("sum", (a,), a.value.sum(axis=axis), vjp,
                          lambda t: None if t is None else t.sum(axis=axis))

    def logsumexp(self, a: Node) -> Node:
        """Log-sum-exp over the last axis, shifted by the max for overflow safety."""
        va = a.value
        m = va.max(axis=-1, keepdims=True)
        e = np.exp(va - m)
        s = e.sum(axis=-1, keepdims=True)
        p = e / s
        y = (m + np.log(s))[..., 0]
        return self._push("logsumexp", (a,), y, lambda g: (np.expand_dims(g, -1) * p,),
                          lambda t: None if t is None else (t * p).sum(axis=-1))

    def dot(self, a, b) -> Node:
        """Full contraction ``sum(a * b)`` to a scalar."""
        a, b = self._lift(a), self._lift(b)
        va, vb = a.value, b.value
        if va.shape != vb.shape:
            raise ContractError(f"dot shape mismatch {va.shape} vs {vb.shape}")
        return self._push(
            "dot", (a, b), np.sum(va * vb),
            lambda g: (g * vb, g * va),
            lambda ta, tb: _tsum(None if ta is None else np.sum(ta * vb),
                                 None if tb is None else np.sum(va * tb)),
        )

    def take(self, a: Node, index) -> Node:
        """Pick ``a[index]`` from a vector, or ``a[b, index[b]]`` row-wise from a matrix."""
        va = a.value
        index = np.asarray(index)
        if va.ndim == 1:
            k = int(index)
            if not 0 <= k < va.shape[0]:
                raise IndexError(f"index {k} out of range for length {va.shape[0]}")
            sel = (k,)
        else:
            if index.shape != (va.shape[0],):
                raise ContractError("need one index per row")
            if np.any(index < 0) or np.any(index >= va.shape[1]):
                raise IndexError("index out of range")
            sel = (np.arange(va.shape[0]), index.astype(np.intp))

        def vjp(g):
            out = np.zeros_like(va)
            np.add.at(out, sel, g)
            return (out,)

        return self._push("take", (a,), va[sel], vjp, lambda t: None if t is None else t[sel])

    def slice(self, a: Node, start: int, stop: int, shape: tuple) -> Node:
        """Reshaped view of ``a[start:stop]`` for a vector node ``a``."""
        n = a.value.size

        def vjp(g):
            out = np.zeros(n)
            out[start:stop] = g.ravel()
            return (out,)

        return self._push("slice", (a,), a.value[start:stop].reshape(shape), vjp,
                          lambda t: None if t is None else t[start:stop].reshape(shape))

    # differentiation

    def vjp(self, output: Node, cotangent) -> np.ndarray:
        """Gradient of ``sum(cotangent * output)`` with respect to the parameters."""
        cotangent = np.asarray(cotangent, dtype=np.float64)
        if cotangent.shape != output.shape:
            raise ContractError(f"cotangent shape {cotangent.shape} != output shape {output.shape}")
        grad = np.zeros(self.n_params)
        adj: dict[int, np.ndarray] = {output.id: cotangent}
        for node in reversed(self.nodes[: output.id + 1]):
            g = adj.pop(node.id, None)
            if g is None:
                continue
            if node.id in self.leaves:
                off, size = self.leaves[node.id]
                grad[off:off + size] += g
                continue
            if node.vjp is None:
                continue
            for pid, pg in zip(node.parents, node.vjp(g)):
                adj[pid] = adj[pid] + pg if pid in adj else pg
        return grad

    def backward(self, output: Node) -> np.ndarray:
        if output.value.size != 1:
            raise ContractError(f"backward needs a scalar output, got shape {output.shape}")
        return self.vjp(output, np.ones_like(output.value))

    def jvp(self, tangent, output: Node) -> np.ndarray:
        """Directional derivative of ``output`` along the parameter tangent."""
        tangent = np.asarray(tangent, dtype=np.float64)
        if tangent.shape != (self.n_params,):
            raise ContractError(f"tangent must have shape ({self.n_params},)")
        tan: dict[int, np.ndarray | None] = {}
        for node in self.nodes[: output.id + 1]:
            if node.id in self.leaves:
                off, size = self.leaves[node.id]
                tan[node.id] = tangent[off:off + size]
            elif node.jvp is None:
                tan[node.id] = None
            else:
                tan[node.id] = node.jvp(*(tan[p] for p in node.parents))
        out = tan[output.id]
        return np.zeros_like(output.value) if out is None else np.broadcast_to(out, output.shape).copy()


def categorical_log_prob(tape: Tape, logits: Node, action) -> Node:
    """``logits[action] - logsumexp(logits)``, row-wise for batched logits."""
    return tape.sub(tape.take(logits, action), tape.logsumexp(logits))


_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def gaussian_log_prob(tape: Tape, mean: Node, sigma: float, action) -> Node:
    if not sigma > 0:
        raise ContractError(f"sigma must be positive, got {sigma}")
    diff = tape.sub(tape._lift(action), mean)
    sq = tape.mul(diff, diff)
    return tape.sub(tape.scale(sq, -0.5 / sigma**2), math.log(sigma) + _LOG_SQRT_2PI)


@dataclass(frozen=True)
class GaussianHead:
    sigma: float = 25.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ContractError(f"sigma must be positive, got {self.sigma}")


_ACTIVATIONS = {
    "tanh": (np.tanh, Tape.tanh),
    "relu": (lambda x: np.maximum(x, 0.0), Tape.relu),
    "linear": (lambda x: x, lambda tape, a: a),
}


class MlpPolicy:
    """Fully connected policy network with weights packed in one flat block.

    ``sizes`` lists layer widths from observation to output.  The head is
    either ``"categorical"`` (outputs are logits) or ``"gaussian"`` (a single
    output is the action mean, with fixed standard deviation ``sigma``).
    """

    def __init__(self, sizes: Sequence[int], activation: str = "tanh",
                 head: str = "categorical", sigma: float = 25.0):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or any(s <= 0 for s in self.sizes):
            raise ContractError(f"bad layer sizes {sizes}")
        if activation not in _ACTIVATIONS:
            raise ContractError(f"unknown activation {activation!r}")
        if head not in ("categorical", "gaussian"):
            raise ContractError(f"unknown head {head!r}")
        if head == "gaussian" and self.sizes[-1] != 1:
            raise ContractError("gaussian head needs a single output")
        self.activation = activation
        self.head = head
        self.gaussian = GaussianHead(sigma) if head == "gaussian" else None
        self._layout = []
        off = 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            self._layout.append((off, n_in, n_out))
            off += (n_in + 1) * n_out
        self.n_params = off

    @property
    def obs_dim(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]

    @property
    def sigma(self) -> float | None:
        return None if self.gaussian is None else self.gaussian.sigma

    def describe(self) -> str:
        extra = f":sigma={self.sigma!r}" if self.gaussian else ""
        return f"mlp:{'-'.join(map(str, self.sizes))}:{self.activation}:{self.head}{extra}"

    @classmethod
    def from_description(cls, text: str) -> MlpPolicy:
        parts = text.split(":")
        if len(parts) < 4 or parts[0] != "mlp":
            raise ContractError(f"not an MLP descriptor: {text!r}")
        sigma = 25.0
        if len(parts) == 5:
            sigma = float(parts[4].split("=")[1])
        return cls([int(s) for s in parts[1].split("-")], parts[2], parts[3], sigma)

    def init(self, rng: np.random.Generator) -> np.ndarray:
        params = np.zeros(self.n_params)
        for off, n_in, n_out in self._layout:
            bound = math.sqrt(6.0 / (n_in + n_out))
            params[off:off + n_in * n_out] = rng.uniform(-bound, bound, n_in * n_out)
        return params

    def _check(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise ContractError(f"expected {self.n_params} parameters, got {params.shape}")
        return params

    def layers(self, params) -> list[tuple[np.ndarray, np.ndarray]]:
        """``(W, b)`` views per layer of a flat parameter block."""
        params = self._check(params)
        return [(params[off:off + n_in * n_out].reshape(n_in, n_out),
                 params[off + n_in * n_out:off + (n_in + 1) * n_out])
                for off, n_in, n_out in self._layout]

    def apply_layers(self, layers, obs) -> np.ndarray:
        act = _ACTIVATIONS[self.activation][0]
        h = obs
        last = len(layers) - 1
        for k, (W, b) in enumerate(layers):
            h = h @ W + b
            if k < last:
                h = act(h)
        return h

    def forward_numpy(self, params, obs) -> np.ndarray:
        """Plain numpy forward pass; used when sampling actions."""
        return self.apply_layers(self.layers(params), np.asarray(obs, dtype=np.float64))

    def forward(self, tape: Tape, params: Node, obs) -> Node:
        act = _ACTIVATIONS[self.activation][1]
        h = tape.const(np.asarray(obs, dtype=np.float64))
        last = len(self._layout) - 1
        for k, (off, n_in, n_out) in enumerate(self._layout):
            W = tape.slice(params, off, off + n_in * n_out, (n_in, n_out))
            b = tape.slice(params, off + n_in * n_out, off + (n_in + 1) * n_out, (n_out,))
            h = tape.add(tape.matmul(h, W), b)
            if k < last:
                h = act(tape, h)
        return h

    def log_prob(self, tape: Tape, params: Node, obs, actions) -> Node:
        out = self.forward(tape, params, obs)
        if self.head == "categorical":
            return categorical_log_prob(tape, out, actions)
        mean = tape.sum(out, axis=-1)
        return gaussian_log_prob(tape, mean, self.sigma, np.asarray(actions, dtype=np.float64))

    def log_prob_numpy(self, params, obs, actions) -> np.ndarray:
        out = self.forward_numpy(params, obs)
        actions = np.asarray(actions)
        if self.head == "categorical":
            m = out.max(axis=-1, keepdims=True)
            lse = (m + np.log(np.exp(out - m).sum(axis=-1, keepdims=True)))[..., 0]
            if out.ndim == 1:
                return out[int(actions)] - lse
            return out[np.arange(out.shape[0]), actions.astype(np.intp)] - lse
        mean = out[..., 0]
        s = self.sigma
        return -0.5 * ((actions - mean) / s) ** 2 - math.log(s) - _LOG_SQRT_2PI

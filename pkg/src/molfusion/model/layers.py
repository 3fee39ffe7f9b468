"""Building blocks of the fused graph network."""

from __future__ import annotations

import math

import numpy as np

from ..autodiff import params as P
from ..autodiff import tensor as T
from ..autodiff.tensor import Tensor
from .config import FFN_MULT, LEAKY_SLOPE


def _register_linear(store, rng, prefix, in_dim, out_dim, bias=True):
    w = store.register(f"{prefix}.w", P.uniform_fan_in(rng, (in_dim, out_dim)), "uniform_fan_in")
    b = store.register(f"{prefix}.b", np.zeros((1, out_dim)), "zeros") if bias else None
    return w, b


def _register_matrix(store, rng, prefix, in_dim, out_dim):
    return store.register(prefix, P.uniform_fan_in(rng, (in_dim, out_dim)), "uniform_fan_in")


class Linear:
    def __init__(self, store, rng, prefix, in_dim, out_dim, bias=True):
        self.w, self.b = _register_linear(store, rng, prefix, in_dim, out_dim, bias)

    def __call__(self, x: Tensor) -> Tensor:
        out = T.matmul(x, self.w)
        return T.add(out, self.b) if self.b is not None else out


class GruCell:
    """Standard gated recurrent cell over row-stacked states.

    z = sigmoid(W_z [x || h] + b_z); r = sigmoid(W_r [x || h] + b_r);
    cand = tanh(W_n [x || r*h] + b_n); h' = (1-z)*h + z*cand.
    """

    def __init__(self, store, rng, prefix, in_dim, hidden_dim):
        shape = (in_dim + hidden_dim, hidden_dim)
        self.w_z = store.register(f"{prefix}.w_z", P.uniform_fan_in(rng, shape), "uniform_fan_in")
        self.b_z = store.register(f"{prefix}.b_z", np.zeros((1, hidden_dim)), "zeros")
        self.w_r = store.register(f"{prefix}.w_r", P.uniform_fan_in(rng, shape), "uniform_fan_in")
        self.b_r = store.register(f"{prefix}.b_r", np.zeros((1, hidden_dim)), "zeros")
        self.w_n = store.register(f"{prefix}.w_n", P.uniform_fan_in(rng, shape), "uniform_fan_in")
        self.b_n = store.register(f"{prefix}.b_n", np.zeros((1, hidden_dim)), "zeros")

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        xh = T.concat([x, h], axis=1)
        z = T.sigmoid(T.add(T.matmul(xh, self.w_z), self.b_z))
        r = T.sigmoid(T.add(T.matmul(xh, self.w_r), self.b_r))
        cand = T.tanh(T.add(T.matmul(T.concat([x, T.mul(r, h)], axis=1), self.w_n), self.b_n))
        return T.add(T.mul(T.sub(Tensor(1.0), z), h), T.mul(z, cand))


class DynamicTanh:
    """Learnable squashing gamma * tanh(alpha * x) + beta."""

    def __init__(self, store, rng, prefix, dim):
        self.alpha = store.register(f"{prefix}.alpha", np.full((1, 1), 0.5), "constant:0.5")
        self.gamma = store.register(f"{prefix}.gamma", np.ones((1, dim)), "ones")
        self.beta = store.register(f"{prefix}.beta", np.zeros((1, dim)), "zeros")

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.mul(self.gamma, T.tanh(T.mul(self.alpha, x))), self.beta)


class LayerNorm:
    def __init__(self, store, rng, prefix, dim):
        self.gamma = store.register(f"{prefix}.gamma", np.ones((1, dim)), "ones")
        self.beta = store.register(f"{prefix}.beta", np.zeros((1, dim)), "zeros")

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.mul(self.gamma, T.layer_norm(x)), self.beta)


def make_norm(kind, store, rng, prefix, dim):
    return DynamicTanh(store, rng, prefix, dim) if kind == "dyt" else LayerNorm(store, rng, prefix, dim)


def segment_softmax(scores: Tensor, segment_ids: np.ndarray, num_segments: int) -> Tensor:
    """Softmax of [E,1] scores within each segment.

    The per-segment max is subtracted as a constant (softmax is shift
    invariant, so gradients are unaffected).
    """
    if scores.shape[0] == 0:
        return scores
    seg_max = np.full(num_segments, -np.inf)
    np.maximum.at(seg_max, segment_ids, scores.data[:, 0])
    shifted = T.sub(scores, Tensor(seg_max[segment_ids][:, None]))
    e = T.exp(shifted)
    denom = T.segment_sum(e, segment_ids, num_segments)
    return T.div(e, T.gather_rows(denom, segment_ids))


class FingerprintMlp:
    """Two-layer embedding of the concatenated fingerprint vector."""

    def __init__(self, store, rng, prefix, in_dim, embed_dim, dropout_rate):
        self.lin1 = Linear(store, rng, f"{prefix}.lin1", in_dim, embed_dim)
        self.lin2 = Linear(store, rng, f"{prefix}.lin2", embed_dim, embed_dim)
        self.dropout_rate = dropout_rate

    def __call__(self, u: Tensor, train=False, rng=None) -> Tensor:
        h = T.relu(self.lin1(u))
        h = T.dropout(h, self.dropout_rate, rng, train) if train else h
        return self.lin2(h)


class GatLayer:
    """Neighbor attention + gated update over directed edges.

    Scores come from a shared vector over [h_v || rep_u] with LeakyReLU, are
    softmax-normalized per center atom, optionally dropped out at train time,
    and weight the transformed neighbor representations; a GRU folds the
    aggregated context into the node state. Atoms without neighbors receive a
    zero context.
    """

    def __init__(self, store, rng, prefix, dim):
        self.attn_w = _register_matrix(store, rng, f"{prefix}.attn_w", 2 * dim, 1)
        self.agg_w = _register_matrix(store, rng, f"{prefix}.agg_w", dim, dim)
        self.gru = GruCell(store, rng, f"{prefix}.gru", dim, dim)

    def __call__(self, states, neighbor_reps, src, dst, n_atoms,
                 dropout_rate=0.0, train=False, rng=None, trace=None):
        h_src = T.gather_rows(states, src)
        scores = T.leaky_relu(
            T.matmul(T.concat([h_src, neighbor_reps], axis=1), self.attn_w), LEAKY_SLOPE
        )
        attn = segment_softmax(scores, src, n_atoms)
        if trace is not None:
            dense = np.zeros((n_atoms, n_atoms))
            dense[src, dst] = attn.data[:, 0]
            trace.append(dense)
        if train and dropout_rate > 0.0:
            attn = T.dropout(attn, dropout_rate, rng, True)
        messages = T.matmul(neighbor_reps, self.agg_w)
        context = T.elu(T.segment_sum(T.mul(attn, messages), src, n_atoms))
        return self.gru(context, states)


class TransformerLayer:
    """Self-attention with an optional adjacency prior, post-block squashing.

    Per head: (w_attn * softmax(Q K^T / sqrt(d_k)) + w_adj * A) V, where A is
    the row-normalized adjacency; heads concatenate through an output
    projection, then residual + norm, position-wise FFN, residual + norm.
    """

    def __init__(self, store, rng, prefix, dim, heads, head_dim, norm_kind, adjacency_bias):
        self.heads = heads
        self.head_dim = head_dim
        self.adjacency_bias = adjacency_bias
        self.w_q = _register_matrix(store, rng, f"{prefix}.w_q", dim, dim)
        self.w_k = _register_matrix(store, rng, f"{prefix}.w_k", dim, dim)
        self.w_v = _register_matrix(store, rng, f"{prefix}.w_v", dim, dim)
        self.out = Linear(store, rng, f"{prefix}.out", dim, dim)
        if adjacency_bias:
            self.lambda_attn = store.register(
                f"{prefix}.lambda_attn", np.full((1, 1), 0.5), "constant:0.5"
            )
            self.lambda_adj = store.register(
                f"{prefix}.lambda_adj", np.full((1, 1), 0.5), "constant:0.5"
            )
        self.norm1 = make_norm(norm_kind, store, rng, f"{prefix}.norm1", dim)
        self.norm2 = make_norm(norm_kind, store, rng, f"{prefix}.norm2", dim)
        self.ffn1 = Linear(store, rng, f"{prefix}.ffn1", dim, FFN_MULT * dim)
        self.ffn2 = Linear(store, rng, f"{prefix}.ffn2", FFN_MULT * dim, dim)

    def head_mix(self, h: Tensor, adjacency: Tensor, trace=None) -> list[Tensor]:
        """Per-head mixed attention outputs (before concatenation)."""
        q = T.matmul(h, self.w_q)
        k = T.matmul(h, self.w_k)
        v = T.matmul(h, self.w_v)
        scale = Tensor(1.0 / math.sqrt(self.head_dim))
        outs = []
        head_trace = [] if trace is not None else None
        for i in range(self.heads):
            cols = slice(i * self.head_dim, (i + 1) * self.head_dim)
            qi, ki, vi = q[:, cols], k[:, cols], v[:, cols]
            soft = T.softmax(T.mul(T.matmul(qi, T.transpose(ki)), scale), axis=1)
            if head_trace is not None:
                head_trace.append(soft.data.copy())
            if self.adjacency_bias:
                mixed = T.add(T.mul(self.lambda_attn, soft), T.mul(self.lambda_adj, adjacency))
            else:
                mixed = soft
            outs.append(T.matmul(mixed, vi))
        if trace is not None:
            trace.append(head_trace)
        return outs

    def __call__(self, h, adjacency, dropout_attn=0.0, dropout_ffn=0.0,
                 train=False, rng=None, trace=None):
        attn = self.out(T.concat(self.head_mix(h, adjacency, trace), axis=1))
        if train and dropout_attn > 0.0:
            attn = T.dropout(attn, dropout_attn, rng, True)
        x = self.norm1(T.add(h, attn))
        f = T.gelu(self.ffn1(x))
        if train and dropout_ffn > 0.0:
            f = T.dropout(f, dropout_ffn, rng, True)
        f = self.ffn2(f)
        return self.norm2(T.add(x, f))


class MixedInformation:
    """Gated blend of the local (neighbor-attention) and global streams.

    The local stream is the mean over all attention-layer outputs projected
    to the shared width then GELU; the global stream is the transformer
    output under GELU. A sigmoid-parametrized scalar gate alpha in [0,1]
    weighs them: alpha * local + (1 - alpha) * global. ``gate_override``
    forces an exact alpha (used by ablations and boundary tests).
    """

    def __init__(self, store, rng, prefix, gat_dim, dim, has_gat, has_gate):
        self.local_proj = Linear(store, rng, f"{prefix}.local", gat_dim, dim) if has_gat else None
        self.gate = (
            store.register(f"{prefix}.gate", np.zeros((1, 1)), "zeros") if has_gate else None
        )
        self.gate_override: float | None = None

    def local_stream(self, gat_outputs: list[Tensor]) -> Tensor:
        mean_h = gat_outputs[0]
        if len(gat_outputs) > 1:
            for extra in gat_outputs[1:]:
                mean_h = T.add(mean_h, extra)
            mean_h = T.mul(mean_h, Tensor(1.0 / len(gat_outputs)))
        return T.gelu(self.local_proj(mean_h))

    def __call__(self, gat_outputs, transformer_out, trace=None):
        f_local = self.local_stream(gat_outputs) if gat_outputs is not None else None
        f_global = T.gelu(transformer_out) if transformer_out is not None else None
        if f_global is None:
            alpha_value = 1.0
            mixed = f_local
        elif f_local is None:
            alpha_value = 0.0
            mixed = f_global
        else:
            if self.gate_override is not None:
                alpha = Tensor(np.full((1, 1), float(self.gate_override)))
            else:
                alpha = T.sigmoid(self.gate)
            alpha_value = float(alpha.data[0, 0])
            mixed = T.add(T.mul(alpha, f_local), T.mul(T.sub(Tensor(1.0), alpha), f_global))
        if trace is not None:
            trace["gate_alpha"] = alpha_value
        return mixed


class SupernodeReadout:
    """Virtual-node pooling: sum-initialized anchor refined by attention + GRU.

    The anchor starts as the sum of node states; per-atom scores against the
    anchor are softmax-normalized, the weighted transformed states form a
    context vector, and a GRU merges context into the anchor.
    """

    def __init__(self, store, rng, prefix, dim):
        self.attn_w = _register_matrix(store, rng, f"{prefix}.attn_w", 2 * dim, 1)
        self.agg_w = _register_matrix(store, rng, f"{prefix}.agg_w", dim, dim)
        self.gru = GruCell(store, rng, f"{prefix}.gru", dim, dim)

    def __call__(self, node_states: Tensor, trace=None) -> Tensor:
        n = node_states.shape[0]
        anchor = T.sum_(node_states, axis=0, keepdims=True)
        anchor_rows = T.broadcast_to(anchor, (n, anchor.shape[1]))
        scores = T.leaky_relu(
            T.matmul(T.concat([anchor_rows, node_states], axis=1), self.attn_w), LEAKY_SLOPE
        )
        attn = T.softmax(scores, axis=0)
        if trace is not None:
            trace["readout_attention"] = attn.data[:, 0].copy()
        context = T.elu(T.matmul(T.transpose(attn), T.matmul(node_states, self.agg_w)))
        return self.gru(context, anchor)


class CrossAttention:
    """Fingerprint embedding queries the graph tokens (virtual node + atoms)."""

    def __init__(self, store, rng, prefix, fp_dim, dim, heads, head_dim):
        self.heads = heads
        self.head_dim = head_dim
        self.w_q = _register_matrix(store, rng, f"{prefix}.w_q", fp_dim, dim)
        self.w_k = _register_matrix(store, rng, f"{prefix}.w_k", dim, dim)
        self.w_v = _register_matrix(store, rng, f"{prefix}.w_v", dim, dim)
        self.out = Linear(store, rng, f"{prefix}.out", dim, dim)

    def __call__(self, fp_embed, virtual, node_states, trace=None) -> Tensor:
        tokens = T.concat([virtual, node_states], axis=0)  # virtual node first
        q = T.matmul(fp_embed, self.w_q)
        k = T.matmul(tokens, self.w_k)
        v = T.matmul(tokens, self.w_v)
        scale = Tensor(1.0 / math.sqrt(self.head_dim))
        outs = []
        head_trace = [] if trace is not None else None
        for i in range(self.heads):
            cols = slice(i * self.head_dim, (i + 1) * self.head_dim)
            weights = T.softmax(T.mul(T.matmul(q[:, cols], T.transpose(k[:, cols])), scale), axis=1)
            if head_trace is not None:
                head_trace.append(weights.data[0].copy())
            outs.append(T.matmul(weights, v[:, cols]))
        if trace is not None:
            trace["cross_attention"] = head_trace
        return self.out(T.concat(outs, axis=1))

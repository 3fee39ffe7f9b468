"""The full predictor: fingerprint branch, two graph streams, fusion, output."""

from __future__ import annotations

import numpy as np

from ..autodiff import tensor as T
from ..autodiff.params import ParameterStore
from ..autodiff.rng import make_rng
from ..autodiff.tensor import Tensor
from ..featurize.features import FeaturizedMolecule
from .config import ModelConfig
from .layers import (
    CrossAttention,
    FingerprintMlp,
    GatLayer,
    Linear,
    MixedInformation,
    SupernodeReadout,
    TransformerLayer,
)


class EmptyMoleculeError(ValueError):
    pass


class MlfgnnModel:
    """Multi-level fusion predictor over featurized molecules.

    Pipeline: atom features project to initial node states; a transformer
    stack (adjacency-biased self-attention) builds the global stream while a
    bond-aware neighbor-attention stack builds the local stream; a learned
    gate mixes them per node; a virtual-supernode readout pools to a molecule
    vector; the fingerprint embedding cross-attends over graph tokens and the
    concatenated representation feeds the output MLP. Ablations drop whole
    branches (and their parameters) via ``config.ablation``.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        config.validate()
        self.config = config
        self.params = ParameterStore()
        rng = make_rng(seed)
        store = self.params
        c = config
        d, g = c.hidden_dim, c.gat_out_dim

        from ..featurize.features import ATOM_FEATURE_DIM, BOND_FEATURE_DIM

        self.node_init = Linear(store, rng, "node_init", ATOM_FEATURE_DIM, g)
        if c.has_gat:
            self.edge_init = Linear(
                store, rng, "edge_init", ATOM_FEATURE_DIM + BOND_FEATURE_DIM, g
            )
            self.gat_stack = [
                GatLayer(store, rng, f"gat.layer{i}", g) for i in range(c.gat_layers)
            ]
        else:
            self.edge_init = None
            self.gat_stack = []
        if c.has_transformer:
            self.adapter = Linear(store, rng, "transformer.adapter", g, d)
            self.transformer_stack = [
                TransformerLayer(
                    store, rng, f"transformer.layer{i}", d, c.heads, c.head_dim,
                    c.norm, c.adjacency_bias,
                )
                for i in range(c.transformer_layers)
            ]
        else:
            self.adapter = None
            self.transformer_stack = []
        self.mixture = MixedInformation(store, rng, "mixture", g, d, c.has_gat, c.has_gate)
        self.readout = SupernodeReadout(store, rng, "readout", d)
        if c.has_fingerprint:
            self.fingerprint_mlp = FingerprintMlp(
                store, rng, "fingerprint_mlp", c.fingerprint_dim, c.fingerprint_embed_dim,
                c.dropout_ffn,
            )
            self.cross_attention = CrossAttention(
                store, rng, "cross_attention", c.fingerprint_embed_dim, d, c.heads, c.head_dim
            )
            mlp_in = 2 * d + c.fingerprint_embed_dim
        else:
            self.fingerprint_mlp = None
            self.cross_attention = None
            mlp_in = d
        self.out1 = Linear(store, rng, "output_mlp.lin1", mlp_in, d)
        self.out2 = Linear(store, rng, "output_mlp.lin2", d, c.n_tasks)
        if self.params.count_values() != c.parameter_count():
            raise RuntimeError(
                f"parameter walk ({self.params.count_values()}) disagrees with the "
                f"closed-form count ({c.parameter_count()})"
            )

    # -- forward -----------------------------------------------------------

    def forward(self, mol: FeaturizedMolecule, train: bool = False,
                rng: np.random.Generator | None = None, trace: dict | None = None) -> Tensor:
        """Predict [1, n_tasks]; raw logits for classification tasks.

        ``rng`` drives dropout and is required when ``train`` is true;
        ``trace``, when given, collects attention maps and gate values.
        """
        c = self.config
        if mol.n_atoms < 1:
            raise EmptyMoleculeError("molecule has no atoms")
        if train and rng is None:
            raise ValueError("training forward needs an rng for dropout")
        atom_feats = Tensor(mol.atom_features)
        adjacency = Tensor(mol.adjacency_normalized)
        h0 = T.relu(self.node_init(atom_feats))  # [n, g]

        fp_embed = None
        if c.has_fingerprint:
            if mol.fingerprint.shape[0] != c.fingerprint_dim:
                raise T.ShapeMismatchError(
                    "fingerprint", mol.fingerprint.shape, (c.fingerprint_dim,)
                )
            fp_embed = self.fingerprint_mlp(
                Tensor(mol.fingerprint[None, :]), train=train, rng=rng
            )

        transformer_out = None
        if c.has_transformer:
            if trace is not None:
                trace.setdefault("transformer_attention", [])
            x = self.adapter(h0)
            for layer in self.transformer_stack:
                x = layer(
                    x, adjacency, c.dropout_attn, c.dropout_ffn, train, rng,
                    trace["transformer_attention"] if trace is not None else None,
                )
            transformer_out = x

        gat_outputs = None
        if c.has_gat:
            if trace is not None:
                trace.setdefault("gat_attention", [])
            src, dst, bond_feats = mol.directed_edges()
            if len(src):
                edge_in = T.concat(
                    [T.gather_rows(atom_feats, dst), Tensor(bond_feats)], axis=1
                )
                edge_ctx = T.relu(self.edge_init(edge_in))  # [E, g]
            else:
                edge_ctx = Tensor(np.zeros((0, c.gat_out_dim)))
            states = h0
            gat_outputs = []
            for i, layer in enumerate(self.gat_stack):
                neighbor_reps = edge_ctx if i == 0 else T.gather_rows(states, dst)
                states = layer(
                    states, neighbor_reps, src, dst, mol.n_atoms,
                    c.dropout_gat, train, rng,
                    trace["gat_attention"] if trace is not None else None,
                )
                gat_outputs.append(states)

        mixed = self.mixture(gat_outputs, transformer_out, trace)
        molecule_vec = self.readout(mixed, trace)

        if c.has_fingerprint:
            fused = self.cross_attention(fp_embed, molecule_vec, mixed, trace)
            representation = T.concat([fused, molecule_vec, fp_embed], axis=1)
        else:
            representation = molecule_vec
        hidden = T.relu(self.out1(representation))
        if train and c.dropout_ffn > 0.0:
            hidden = T.dropout(hidden, c.dropout_ffn, rng, True)
        out = self.out2(hidden)

        if trace is not None:
            trace["lambda_attn"] = [
                float(l.lambda_attn.data[0, 0]) for l in self.transformer_stack
                if c.adjacency_bias
            ]
            trace["lambda_adj"] = [
                float(l.lambda_adj.data[0, 0]) for l in self.transformer_stack
                if c.adjacency_bias
            ]
            if "gate_alpha" not in trace:
                trace["gate_alpha"] = 1.0 if c.ablation == "gat_only" else 0.0
        return out

    def predict(self, mol: FeaturizedMolecule) -> np.ndarray:
        """Eval-mode prediction; sigmoid applied for classification."""
        out = self.forward(mol).data[0]
        if self.config.task == "classification":
            return 1.0 / (1.0 + np.exp(-out))
        return out.copy()

    # -- introspection helpers ----------------------------------------------

    def gate_alpha(self) -> float | None:
        if self.mixture.gate is None:
            return None
        return float(1.0 / (1.0 + np.exp(-self.mixture.gate.data[0, 0])))

    def lambda_values(self) -> tuple[list[float], list[float]]:
        if not (self.config.has_transformer and self.config.adjacency_bias):
            return [], []
        attn = [float(l.lambda_attn.data[0, 0]) for l in self.transformer_stack]
        adj = [float(l.lambda_adj.data[0, 0]) for l in self.transformer_stack]
        return attn, adj

    def state_arrays(self) -> dict[str, np.ndarray]:
        return self.params.state_arrays()

    def load_state_arrays(self, state: dict[str, np.ndarray]) -> None:
        self.params.load_state_arrays(state)

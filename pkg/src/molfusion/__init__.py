"""molfusion: desk-scale molecular property prediction toolkit.

SMILES parsing, graph/fingerprint featurization, a reverse-mode tensor
engine, a fused local/global graph network with fingerprint cross-attention,
training and evaluation utilities, and a command-line interface.
"""

__version__ = "0.1.0"

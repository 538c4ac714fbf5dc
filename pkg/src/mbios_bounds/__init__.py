"""Information-theoretic bounds for binary linear codes and LDPC ensembles on MBIOS channels."""

__version__ = "0.1.0"

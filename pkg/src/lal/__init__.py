"""Proof-net normalization for intuitionistic light affine logic:
terms, nets, polynomially bounded cut elimination, and the machine
encodings, with full complexity instrumentation."""

__version__ = "0.1.0"

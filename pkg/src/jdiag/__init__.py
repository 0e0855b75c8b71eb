"""Exact-arithmetic engine for uni-trivalent diagram algebras."""

__version__ = "0.1.0"

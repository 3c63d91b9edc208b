"""Cycle-accurate simulator for four linear-time systolic algorithms:
polynomial GCD over GF(p), integer GCD, Toeplitz system solving, and the
symmetric eigenvalue problem, each validated against independent serial
oracles."""

from . import eigen, engine, gfield, intgcd, oracle, polygcd, toeplitz

__all__ = ["eigen", "engine", "gfield", "intgcd", "oracle", "polygcd",
           "toeplitz"]

"""Degenerate Keller–Segel porous-medium system with Stokes flow: solvers and regularity diagnostics."""

__version__ = "0.1.0"

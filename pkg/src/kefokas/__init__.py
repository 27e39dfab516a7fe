"""Unified-transform toolkit for the Kundu-Eckhaus equation on the half-line.

Direct spectral transform, numerical Riemann-Hilbert inversion, long-time
asymptotics and an independent Crank-Nicolson solver used as an oracle.
"""

__version__ = "0.1.0"

"""Deformations of invariant Spin(7)-instantons on the Bryant-Salamon space.

The subpackages rebuild, from explicit Lie-theoretic data, the nearly-G2
geometry of the squashed 7-sphere, the Bryant-Salamon flow, the instanton
profiles, the Dirac spectra on the link and the index arithmetic.
"""

__version__ = "0.1.0"

"""oddflow: pseudo-spectral simulator and verification harness for 2D
incompressible non-homogeneous flow with odd viscosity on the torus."""

__version__ = "0.1.0"

"""
bellbench - simulation and statistical analysis of CHSH Bell tests
on polarization-entangled photon pairs.
"""

__version__ = "0.1.0"

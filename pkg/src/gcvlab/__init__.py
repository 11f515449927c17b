"""Spectral laboratory for vortical gravity-capillary water waves.

Finite Fourier truncations of the water-waves Hamiltonian with constant
vorticity, resonance/small-divisor certificates, pluri-homogeneous map
algebra with symplectic correction, and iterative Birkhoff normal forms
with super-action drift experiments.
"""

from gcvlab.medium import Medium, gsym, omega, big_omega, msym

__all__ = ["Medium", "gsym", "omega", "big_omega", "msym"]

__version__ = "0.1.0"

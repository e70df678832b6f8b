"""Numerical laboratory for the semiclassical mean-field limit of trapped fermions.

Lattice discretizations of ``-hbar^2 Laplacian + U``, Thomas-Fermi and Hartree
solvers, phase-space transforms, and an exact finite-mode Fock space.
"""

from .errors import *  # noqa: F401,F403
from .lattice import Grid, ModelParams
from .potentials import PowerLaw, Regular, apply_cutoff, harmonic
from .thomas_fermi import TFState, tf_solve
from .hartree import HartreeState, scf_solve

__version__ = "0.1.0"

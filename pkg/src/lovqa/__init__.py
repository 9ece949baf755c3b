"""Linear-optical variational quantum algorithms: Fock-space simulation of
bosonic and fermionic interferometers, cost landscapes, parameter-shift
gradients, Rotosolve/OICD optimizers and dual-valued phase shifters."""

from .circuit import Circuit, haar_random, universal_mesh
from .fock import Statistics
from .qubo import QuboInstance

__all__ = ["Circuit", "QuboInstance", "Statistics", "haar_random", "universal_mesh"]
__version__ = "0.1.0"

"""Coherent-state projection kernels for constrained systems.

Submodules:

* ``quadrature`` -- Gauss-Hermite, adaptive and regulated integration, Richardson limits
* ``coherent_states`` -- phase-space points, overlaps, polynomial symbols
* ``projectors`` -- spectral bands and group-averaging projectors
* ``rkhs`` -- reproducing kernels, their checks and reductions
* ``constraint_symbols`` -- symbols of P|P|^gamma and P^n
* ``penalty`` -- penalty evolution matrix elements and their large-A limits
* ``dynamics`` -- classical constrained and penalty flows
"""

from .coherent_states import HbarContext, PhasePoint, overlap
from .errors import CSKError

__version__ = "0.1.0"

__all__ = ["PhasePoint", "HbarContext", "overlap", "CSKError", "__version__"]

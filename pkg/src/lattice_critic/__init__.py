"""Square-lattice sums, MacDonald double sums and critical-line island geometry.

Submodules: ``core`` (contexts and differentiation), ``specfun`` (zeta,
L_{-4}, gamma, xi_1), ``lattice`` (S_0, MacDonald sums, U_K, F and friends),
``zeros`` (critical-line and off-axis zeros, catalogs), ``regions``
(islands and inner islands), ``stats``, ``grid``, ``identities`` and ``cli``.
"""

from __future__ import annotations

from .core import DEFAULT_CTX, EvalContext
from .errors import LatticeCriticError

__version__ = "0.1.0"

__all__ = ["DEFAULT_CTX", "EvalContext", "LatticeCriticError", "__version__"]

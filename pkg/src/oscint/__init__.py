"""Numerical companions to a weak-(1,1) bound for oscillating kernels.

The toolkit builds, at desk scale, every constructive object in the
standard proof pipeline for weak-type (1,1) estimates of oscillating
singular integrals on graded groups, and measures each inequality's
realized constant:

* :mod:`oscint.groups`   - step-two groups, dilations, quasi-norms;
* :mod:`oscint.lattice`  - grids, quadrature, weak-L1, group convolution;
* :mod:`oscint.kernels`  - oscillating kernel family, smoothness
  seminorms, Fourier decay fits;
* :mod:`oscint.czd`      - stopping-time decomposition on dyadic-type
  cells with verified properties;
* :mod:`oscint.spectral` - Laplacian / sub-Laplacian functional calculus
  and smoothing kernels;
* :mod:`oscint.weak11`  - mollified bad parts, replacement estimate,
  near/far energy split, end-to-end certification;
* :mod:`oscint.cli`      - the ``oscint`` experiment runner.

Hot inner loops (interpolating group convolution, shifted-kernel sums)
run through a small C extension when it was built, with an equivalent
NumPy fallback otherwise; ``oscint.backend_name()`` reports which one is
active and ``OSCINT_DISABLE_EXT=1`` forces the fallback.
"""

from ._backend import backend_name
from .groups import (
    HomogeneousGroup,
    abelian_group,
    group_from_dict,
    group_from_name,
    heisenberg_group,
)
from .lattice import Grid, SampledFunction

__version__ = "0.1.0"

__all__ = [
    "HomogeneousGroup",
    "abelian_group",
    "heisenberg_group",
    "group_from_name",
    "group_from_dict",
    "Grid",
    "SampledFunction",
    "backend_name",
    "__version__",
]

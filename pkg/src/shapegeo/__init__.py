"""Reduced Jacobi-Maupertuis geometry of the equal-mass planar 4-body strong-force problem.

Submodules: ``config_space`` (physical configurations, Hopf map, lifts),
``shirt`` and ``collinear`` (the two invariant surfaces), ``geodesic``
(charted geodesic flow), ``syzygy``, ``bvp`` (boundary-to-boundary shooting),
``verify`` (oracle suites), ``io`` and ``cli``.
"""

from . import bvp, collinear, config_space, geodesic, shirt, syzygy, verify
from .errors import ShapeGeoError

__all__ = ["bvp", "collinear", "config_space", "geodesic", "shirt", "syzygy", "verify", "ShapeGeoError"]

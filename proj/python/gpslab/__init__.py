"""Pinning-model laboratory over heavy-tailed bivariate renewals.

The compiled extension carries every operation; this package only resolves
its location.  Installed wheels place ``_gpslab`` inside the package, while
the build tree exposes it on ``PYTHONPATH`` next to this directory.
"""

try:
    from ._gpslab import *  # noqa: F401,F403
    from ._gpslab import __version__  # noqa: F401
except ImportError:
    from _gpslab import *  # noqa: F401,F403
    from _gpslab import __version__  # noqa: F401

"""Multi-view stereo toolkit for textureless, non-Lambertian surfaces under
known illumination.

Everything lives in the compiled extension; this package re-exports it.
"""

from nlmvs._core import *  # noqa: F401,F403
from nlmvs._core import __doc__  # noqa: F401

__version__ = "0.1.0"

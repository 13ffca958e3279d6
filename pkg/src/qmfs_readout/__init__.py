"""Dispersive qubit readout with coherent, single-mode and two-mode squeezed light.

The moment engine propagates the Gaussian state of the cavities and the
integrated homodyne record exactly; closed forms, optimizers, a Monte Carlo
sampler and a transmon dispersive-shift calculator sit on top of it.
"""

from .model import *  # noqa: F401,F403
from .source import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .readout import *  # noqa: F401,F403
from .montecarlo import *  # noqa: F401,F403
from .optimize import *  # noqa: F401,F403
from .transmon import *  # noqa: F401,F403
from . import sweeps  # noqa: F401

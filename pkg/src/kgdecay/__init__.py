"""Numerical experiments on dispersive decay for the 1D Klein-Gordon
equation with a potential."""
from .core import *  # noqa: F401,F403
from .special import *  # noqa: F401,F403
from .free_kg import *  # noqa: F401,F403
from .scattering import *  # noqa: F401,F403
from .perturbed import *  # noqa: F401,F403
from .oracle_fd import *  # noqa: F401,F403
from .born import *  # noqa: F401,F403
from .analysis import *  # noqa: F401,F403

__version__ = "0.1.0"

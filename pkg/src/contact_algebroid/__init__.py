"""Contact Lagrangian and Hamiltonian mechanics on Lie algebroids."""

from .algebroid import *  # noqa: F401,F403
from .calculus import *  # noqa: F401,F403
from .config import ConfigError, Scenario, build_scenario, load_config  # noqa: F401
from .expr import *  # noqa: F401,F403
from .hamilton_jacobi import *  # noqa: F401,F403
from .hamiltonian import *  # noqa: F401,F403
from .integrate import *  # noqa: F401,F403
from .lagrangian import *  # noqa: F401,F403
from .legendre import *  # noqa: F401,F403

__version__ = "0.1.0"

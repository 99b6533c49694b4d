"""Discrete-time fermionic quantum walks coupled to a traced bosonic reservoir.

Everything lives in the compiled extension; this package re-exports it.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__, __version__  # noqa: F401

from ._bwlab import *  # noqa: F401,F403
from ._bwlab import __version__

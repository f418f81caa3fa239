"""Deep optimal stopping, regression baselines and exposure profiles of Bermudan options."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, NumericError  # noqa: F401

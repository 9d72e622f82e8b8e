"""Python bindings for the SO^plog toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import Error, ParseError, BudgetExceeded  # noqa: F401

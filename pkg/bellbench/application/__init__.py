"""
Application layer for bellbench.
Simulation, angle optimization and the services behind the CLI commands.
"""

from .event_sim import *
from .optimizer import *
from .services import *

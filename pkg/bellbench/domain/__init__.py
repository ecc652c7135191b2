"""
Domain layer for bellbench.
Quantum correlations, apparatus rate models, estimators, error budget and bounds.
"""

from .models import *
from .validators import *
from .quantum import *
from .apparatus import *
from .estimators import *
from .budget import *
from .bounds import *

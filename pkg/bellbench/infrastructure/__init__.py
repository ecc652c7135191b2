"""
Infrastructure layer for external dependencies.
Contains the run configuration and the file system and logging adapters.
"""

from .config import *
from .file_adapter import *
from .logging_adapter import *

"""Static figure regeneration from rpnvsim CSV result tables."""

from .figures import (FigureSpec, MissingColumnError, RENDERERS, EmptyTableError,
                      recognized_outputs, render)

__version__ = "0.1.0"

"""Render the standard figure set from a report manifest and its CSV datasets.

The renderer is a pure consumer: it reads the manifest JSON plus the CSV
and JSON datasets it references, never the producing library itself.
"""

from .loading import FigureInputError, load_bundle
from .render import FIGURE_BUILDERS, render_all

__all__ = ["FigureInputError", "FIGURE_BUILDERS", "load_bundle", "render_all"]
__version__ = "0.1.0"

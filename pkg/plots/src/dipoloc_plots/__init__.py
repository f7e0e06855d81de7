"""Figure rendering for dipoloc simulation outputs.

Consumes only the CSV/JSON artifacts written by the ``dipoloc`` CLI and
renders publication-style figures; performs no statistical computation.
"""

from dipoloc_plots.io import SchemaError, read_table
from dipoloc_plots.render import FIGURE_KINDS, render

__all__ = ["FIGURE_KINDS", "SchemaError", "read_table", "render"]
__version__ = "0.1.0"

"""Figure renderers for the CSV outputs of the ppk command-line tool."""

__version__ = "0.1.0"

from .render import KINDS, render
from .tables import Table, read_table

__all__ = ["__version__", "KINDS", "render", "Table", "read_table"]

"""Static report renderer for epsim output directories: deterministic PNG
figures plus an HTML index, built purely from the documented CSV, manifest
and sweep-index formats."""

__version__ = "0.1.0"

from .data import ReportError, read_csv_columns, read_manifest, read_sweep_index
from .figures import ALL_FIGURES, FigureRecord, ReportSpec, available_figures, render

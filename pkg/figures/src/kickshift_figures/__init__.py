"""Figure rendering for kickshift run directories.

This package only reads the documented run artifacts (manifest.json, CSV
tables, ``.ksdn`` density snapshots); it never imports the simulator.
"""

__version__ = "0.1.0"

from .loaders import LoaderError, Manifest, load_manifest, read_density_csv, read_scan_csv, read_snapshot
from .render import FigureSpec, RenderError, render

__all__ = [
    "FigureSpec",
    "LoaderError",
    "Manifest",
    "RenderError",
    "load_manifest",
    "read_density_csv",
    "read_scan_csv",
    "read_snapshot",
    "render",
]

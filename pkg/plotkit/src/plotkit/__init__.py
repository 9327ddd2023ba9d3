"""Figure rendering for formation-control trajectory CSV and report JSON files.

Reads only the published file formats (no coupling to the simulation
package): the trajectory CSV schema with per-agent pose/control columns and
per-pair shape columns, and the JSON run manifest for styling values such as
the target separation.
"""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, MissingColumn, render

__all__ = ["FIGURE_KINDS", "FigureSpec", "MissingColumn", "render", "__version__"]

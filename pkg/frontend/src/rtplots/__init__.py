"""Figure rendering for the transport solver's CSV outputs.

Consumes only the documented CSV contract (``# key=value`` metadata lines,
a column-name line, 17-significant-digit rows); no in-process coupling to
the solver package.
"""

from .csvio import read_csv
from .spec import PlotSpec, load_spec
from .render import RenderResult, render

__version__ = "0.1.0"

"""Time-reversal asymmetry of volatility, three independent ways.

The package measures the asymmetry statistic Z(tau) -- the excess of the
covariance between past squared returns and future integrated variance over
its time-reversed counterpart -- and cross-validates three routes to it:

* :mod:`zlab.empirical`  -- estimators on daily return / realized-variance
  series (per-index curves, cross-index averages, integrated differences);
* :mod:`zlab.model`      -- exact quadrature formulas under the rough Heston
  model, their small-day-length asymptotics, and stationary moment limits;
* :mod:`zlab.simulate`   -- a Volterra Euler Monte Carlo engine whose sample
  statistics provide an independent oracle for the model formulas.

:mod:`zlab.special` supplies the Mittag-Leffler kernel machinery that the
model and simulation share, and :mod:`zlab.cli` wires everything into a
command line front end (``zlab empirical|model|simulate|compare``).
"""

from .errors import (
    ContractError,
    MemoryGuardError,
    ParseError,
    QuadratureError,
    SimulationError,
    ZlabError,
)
from .special import MlParams, l2_norm_f_squared, ml_cdf, ml_density, ml_neg

__all__ = [
    "ContractError",
    "MemoryGuardError",
    "MlParams",
    "ParseError",
    "QuadratureError",
    "SimulationError",
    "ZlabError",
    "l2_norm_f_squared",
    "ml_cdf",
    "ml_density",
    "ml_neg",
]

__version__ = "0.1.0"

"""Spectral computations for Sturm-Liouville problems written with quasi-derivatives.

The differential expression is

    tau f = (-(p [f' + s f])' + s p [f' + s f] + q f) / r

on a finite interval, with piecewise polynomial coefficients.  Solutions
are carried as pairs ``(f, f^[1])`` with ``f^[1] = p (f' + s f)``, so a
jump in ``s`` (a derivative of a step, i.e. a point interaction in the
potential) never has to be differentiated.
"""

from .coefficients import *  # noqa: F401,F403
from .quasi_ode import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403
from .debranges import *  # noqa: F401,F403
from .transforms import *  # noqa: F401,F403
from .inverse_verify import *  # noqa: F401,F403
from .asymptotics import *  # noqa: F401,F403
from . import coefficients, quasi_ode, spectral, debranges, transforms, inverse_verify, asymptotics

__version__ = "0.1.0"

"""swakit: keyed small-window stream integration and queueing prediction.

The package splits into workload modeling (distributions, params), trace
synthesis and replay (trace), the stream operators themselves (engine),
result scoring (metrics), and analytic/simulated performance prediction
(queueing).  The ``swakit`` console script ties them together.
"""

__version__ = "0.1.0"

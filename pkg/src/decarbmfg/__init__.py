"""Equilibrium stochastic discount factor solver for a decarbonizing mean-field market.

The market consists of a continuum of carbon-emitting firms driven by a
two-dimensional common noise (firm growth and emission-penalty level) plus
idiosyncratic noise, and two CARA investors (regular and green). The
equilibrium SDF is the fixed point of the market-clearing map and is computed
by a damped fixed-point iteration with regression-estimated conditional
expectations on a simulated path ensemble.

Subpackage map:

- ``model``      parameters, time grid, closed-form path factors
- ``paths``      common-noise path ensemble simulation
- ``regress``    least-squares conditional expectation estimators
- ``solver``     the damped fixed-point iteration and its potential
- ``analytics``  emission distributions, curves, price decomposition
- ``oracle``     Gauss-Hermite quadrature reference solver (tiny grids)
- ``cli``        configuration, experiment orchestration, reports
"""

__version__ = "0.1.0"

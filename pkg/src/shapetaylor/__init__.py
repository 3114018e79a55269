"""Shape Taylor expansions for two-dimensional acoustic scattering.

Modules
-------
specfun    Bessel and Hankel functions of orders 0 and 1.
geometry   Sampled closed curves, velocity fields, frame shape derivatives.
bie        Nystrom discretization of Helmholtz layer operators.
scatter    Incident fields and forward solvers for four boundary conditions.
traces     Tangential and high-order normal derivatives, DtN map.
shapecalc  Shape-derivative boundary data, derivative stacks, Taylor expansions.
uq         Moment estimators under random boundary perturbations.
cli        Configuration-driven experiment runner.
"""

__version__ = "0.1.0"

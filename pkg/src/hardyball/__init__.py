"""Numerical laboratory for a radial Dirichlet problem with an
inverse-square potential on the Poincare ball and its flat singular
reduction: closed-form exponents, shooting and variational solvers,
subcritical continuation, concentration diagnostics, and identity audits."""

__version__ = "0.1.0"

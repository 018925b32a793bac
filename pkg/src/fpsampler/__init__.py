"""Neural pushforward samplers for Fokker-Planck equations.

Trains a generator network mapping base noise to samples of the PDE's
solution distribution by driving the weak-form residual against a bank of
plane-wave test functions to zero, adversarially sharpening the bank along
the way. Ships the built-in benchmark problems, an SDE/quadrature oracle
suite for validation, and a CLI experiment runner.
"""

__version__ = "0.1.0"

"""Cyclical MCMC sampling on Gaussian mixtures, with an exact finite-chain verification lab."""
from ._backend import BACKEND
from .schedule import Schedule, beta_at, beta_derivative
from .targets import (MixtureComponent, Target, build_preset, energy, mixture, tempered_log_density,
                      two_mode_target)

__version__ = "0.1.0"

"""Minute-resolution solar irradiance forecasting with a ReLU recurrent network.

Stages: station file ingest, Bird clear-sky model, clear-sky index features
and windows, a NumPy RNN trained by BPTT, and RMSE evaluation against
persistence.
"""

from .config import __version__
from .estimators import RNNForecaster, SequenceScaler

__all__ = ["RNNForecaster", "SequenceScaler", "__version__"]

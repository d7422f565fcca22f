"""Kerr optomechanical sideband response: steady state, OMIT spectra,
second-order sidebands, group delays and a time-domain reference integrator."""

__version__ = "0.1.0"

"""Narrowband single-photon pulses through hot cesium vapor.

Layers, bottom up: atomic (the D1 line table), medium (susceptibility and
the cell transfer function), envelopes (time grids and emission models),
propagation (transmitted pulses and their arrival-time observables),
lindblad (the density-matrix cross-check of the weak-field limit), fitting
(the five estimators used on measured histograms), tuning (the two-actuator
frequency controller), and scenarios plus cli (the runnable surface).
"""

__version__ = "0.1.0"

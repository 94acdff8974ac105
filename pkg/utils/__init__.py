"""
Utilities package for ONQ Lab.
Contains the physics kernels, unit and scenario handling, and data file persistence.
"""

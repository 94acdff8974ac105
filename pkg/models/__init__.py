"""
Models package for ONQ Lab.
Contains the value types for nuclear species, response tensors, the transduction system and optics.
"""

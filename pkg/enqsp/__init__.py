"""
Ensemble Quantum Signal Processing (EnQSP) Simulator

Dense-matrix simulation of quantum signal processing circuits whose phase
rotations suffer random coherent errors, and of the ensemble averaging that
mitigates them.
"""

__version__ = "0.1.0"

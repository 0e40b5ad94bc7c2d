"""
Core Package
Numerical laboratory: Hilbert-space operations, Haar sampling, concentration
experiments, macro partitions, exact dynamics and superposition diagnostics.
"""

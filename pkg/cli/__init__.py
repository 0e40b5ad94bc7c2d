"""
CLI Package
Run configuration models and the ergodic-lab command-line entry point.
"""

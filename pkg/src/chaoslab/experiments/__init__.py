"""Experiment configuration, drivers, acceptance checks and outputs."""

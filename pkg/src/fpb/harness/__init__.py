"""Batch command surface: generate, synthesize, evaluate, perturb, sweep, report."""

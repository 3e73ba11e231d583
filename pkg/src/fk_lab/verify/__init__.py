"""Bound checking: statistics, constants, corpus models and the verification suites."""

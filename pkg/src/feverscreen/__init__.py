"""Fever screening toolkit: simulate heat-transfer trials, extract thermal
and touch-contact features, fit regression models, and evaluate screening
performance."""

__version__ = "0.1.0"

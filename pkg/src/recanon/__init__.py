"""Tabular anonymization: privacy models, risk and loss metrics, lattice search,
and a knowledge graph for validating anonymization plans."""

__version__ = "0.1.0"

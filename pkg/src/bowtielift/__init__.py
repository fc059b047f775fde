"""Bowtie-free graph toolkit: structure theory, lifts, membership, Ramsey machinery."""

__version__ = "0.1.0"

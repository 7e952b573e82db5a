"""Design and simulation tools for a trapped ion coupled to a superconducting
charge qubit through a short transmission-line cavity."""

__version__ = "0.1.0"

"""Joint LEO orbit estimation and beam tracking for a hybrid-array ground station."""

__version__ = "0.1.0"

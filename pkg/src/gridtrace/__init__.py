"""Data-center electricity load and CO2e attribution over grid regions."""

__version__ = "0.1.0"

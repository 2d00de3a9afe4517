"""Lead-lag information surplus between social sentiment and stock volatility."""

__version__ = "0.1.0"

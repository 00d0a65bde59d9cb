"""Volatility modelling and forecasting for energy commodity returns."""

__version__ = "0.1.0"

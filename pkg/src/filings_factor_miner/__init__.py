"""Quantify ESG-term usage in SEC filings and relate it to stock-return
moments through naive OLS and a collinearity-free SVD factor track."""

__version__ = "0.1.0"

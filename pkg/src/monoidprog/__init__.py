"""Programs over finite monoids: algebra, regular languages, SUM expressions and fooling pairs."""

__version__ = "0.1.0"

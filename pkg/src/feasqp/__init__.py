"""Safety-filter QPs with learned SVM feasibility constraints."""

__version__ = "0.1.0"

"""Factor engineering, stock clustering and regression-model comparison on the
weekly Dow Jones Index dataset."""

__version__ = "0.1.0"

"""mencode: minimum-encoding predictive inference for discrete models.

Four predictive methods (MMLWF, MMLP, MMLV, MDL) for Naive Bayes
parameter estimation, a one-parameter two-part-code laboratory, and a
reproducible evaluation harness exposed through a FastAPI service and a
thin CLI.
"""

__version__ = "0.1.0"

METHODS = ("MMLWF", "MMLP", "MMLV", "MDL")

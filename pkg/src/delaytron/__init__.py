"""Online multiclass classification with delayed bandit feedback."""
__version__ = "0.1.0"

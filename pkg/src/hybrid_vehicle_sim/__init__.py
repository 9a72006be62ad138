"""Multi-modal rigid-body simulator for a hybrid aerial-aquatic vehicle."""

__version__ = "0.1.0"

"""Pentagon-folding and Jonquieres-involution dynamics toolkit."""

__version__ = "0.1.0"

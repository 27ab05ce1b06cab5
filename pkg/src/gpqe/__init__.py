"""Classical simulation toolkit for the projective quantum eigensolver with scatterer operators."""

__version__ = "0.1.0"

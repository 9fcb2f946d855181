"""Fourfold-anisotropy thin-film domain walls: 1D wall profiles and 2D remanent states."""

__version__ = "1.0.0"

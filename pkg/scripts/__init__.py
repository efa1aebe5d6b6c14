"""Command-line entry points for the spectral laboratory."""

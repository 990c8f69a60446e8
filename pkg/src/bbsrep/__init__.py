"""BBS group signatures with reputation-bound interval keys (BBS*), and a
simulator for a privacy-aware reputation-based VANET announcement scheme."""

__version__ = "0.1.0"

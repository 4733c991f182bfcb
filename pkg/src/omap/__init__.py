"""Multi-asset shielded ledger with private, atomic two-party exchange."""

__version__ = "0.1.0"

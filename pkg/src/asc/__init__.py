"""Affectible session contracts: compliance, orchestration, rollback, games, subcontracts."""

__version__ = "0.1.0"

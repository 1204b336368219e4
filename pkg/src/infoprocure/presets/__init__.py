"""Shipped experiment preset configs (TOML)."""

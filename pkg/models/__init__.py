"""Configuration documents for txreid."""

"""Click subcommands for txreid (one module per command)."""

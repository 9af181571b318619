"""Domain types: meta-game values, network snapshots, run records and API bodies."""

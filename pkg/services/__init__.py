"""Meta-game solving, networks, oracles, the double-oracle loop and experiment orchestration."""

"""Triangle generalized preferential attachment: generators, analysis and power-law testing."""

__version__ = "0.1.0"

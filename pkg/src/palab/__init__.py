"""Decision procedures for probabilistic automata of bounded ambiguity."""

__version__ = "0.1.0"

"""Second Ostrogradsky series and the Bernoulli convolutions they generate."""

__version__ = "0.1.0"

"""Type-driven incremental shift-reduce semantic parsing.

Maps natural-language questions onto typed lambda-calculus meaning
representations, decoding left to right with a beam and learning
weights with a latent-variable max-violation perceptron.
"""

__version__ = "0.1.0"

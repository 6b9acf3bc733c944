"""Democratic co-training pipeline for hierarchical offensive-language labeling.

Trains a small ensemble of diverse text classifiers on a gold seed set,
distantly labels a large unlabeled corpus with aggregated confidence scores
at three taxonomy levels, and curates the result into training material.
"""

__version__ = "0.1.0"

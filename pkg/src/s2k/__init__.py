"""s2k: a post-training data toolchain for domain QA.

Turns a raw domain corpus into fused question-answer data (internal/external
knowledge self-selection), structured reasoning QA, per-token selective-SFT
weights, and reward/metric scores.
"""

__version__ = "0.1.0"

"""Error types shared across the package."""


class DataError(ValueError):
    """Invalid or inconsistent input data: corpora, labels, predictions."""


class ModelError(ValueError):
    """Corrupt, unreadable, or incompatible model artifacts."""

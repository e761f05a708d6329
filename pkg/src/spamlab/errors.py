class DataError(Exception):
    """Malformed on-disk artifact: corpus file, token map, rule file, or model."""

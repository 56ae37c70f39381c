def round_trip(value) -> str:
    """Shortest decimal string that parses back to the same float."""
    return repr(float(value))

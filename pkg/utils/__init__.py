"""CSV report helpers."""

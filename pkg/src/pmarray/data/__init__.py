"""Reference data shipped with pmarray."""

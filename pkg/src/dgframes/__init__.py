"""Deterministic Delsarte-Goethals sensing frames and compressed learning."""

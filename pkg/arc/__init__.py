"""Benchmarking of quantum devices with alternating repetition codes."""

"""Noisy privatization of two-candidate social choice functions."""

"""Spectral discretization of singular pseudodifferential calculus."""

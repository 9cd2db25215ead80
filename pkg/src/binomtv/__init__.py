"""Binomial sampling with certified statistical-distance bounds."""

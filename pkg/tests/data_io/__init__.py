"""
Test package for accproxcg data input.
"""

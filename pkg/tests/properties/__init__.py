"""
Property-based tests for the exterior calculus and the subspace algebra.

Run with:
    pytest tests/properties/ -v
    pytest tests/properties/ -v --hypothesis-seed=0 (deterministic runs)
"""

# Components package
# Use lazy imports so that importing one layer does not pull in sympy-heavy siblings

_EXPORTS = {
    'Chart': 'symbolic_core',
    'Point': 'symbolic_core',
    'parse_expression': 'symbolic_core',
    'expr_equal': 'symbolic_core',
    'sample_points': 'symbolic_core',
    'Subspace': 'subspaces',
    'Form': 'exterior_calculus',
    'VForm': 'exterior_calculus',
    'VectorField': 'exterior_calculus',
    'KVectorField': 'exterior_calculus',
    'SmoothMap': 'exterior_calculus',
    'KContact': 'structures',
    'KSymplectic': 'structures',
    'LieAlgebra': 'lie_actions',
    'InfAction': 'lie_actions',
    'Momentum': 'lie_actions',
    'CoadjointValue': 'lie_actions',
    'LevelSet': 'reduction',
    'QuotientPresentation': 'reduction',
    'HamiltonianSystem': 'dynamics',
    'HamKVF': 'dynamics',
    'GridSpec': 'dynamics',
    'SectionGrid': 'dynamics',
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    """Lazy import of the geometry layers."""
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    from importlib import import_module

    return getattr(import_module(f"{__name__}.{module}"), name)

"""Exception types shared across the package."""


class DomainError(ValueError):
    """Parameter point (or segment) outside a chart's domain."""


class DegeneracyError(ArithmeticError):
    """Rank-deficient Jacobian / near-singular pullback metric."""


class RangeError(ValueError):
    """Radius outside the valid window (guard radius, small-radius cutoff)."""


class ResourceLimitError(RuntimeError):
    """Vertex budget or similar resource cap exceeded."""


class MeshError(RuntimeError):
    """Triangulation violates a structural invariant (manifoldness, areas)."""

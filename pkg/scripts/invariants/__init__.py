"""
Symplectic invariant theory: perfect matchings, natural-tensor spaces and dimensional identities.
"""

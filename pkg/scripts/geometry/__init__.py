"""
Polynomial Fedosov structures, curvature and the curvature identities.
"""

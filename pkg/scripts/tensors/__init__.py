"""
Multilinear algebra over exchangeable scalar fields: tensors, contraction,
symplectic linear algebra and the curvature / normal-tensor symmetry spaces.
"""

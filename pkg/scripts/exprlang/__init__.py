"""
Index-expression language for natural tensors.
"""

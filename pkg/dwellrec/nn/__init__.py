"""
Numeric substrate: named parameters, functional ops with exact gradients,
the attention layers used by the user encoders, Adam, finite-difference
checking and checkpoints.
"""

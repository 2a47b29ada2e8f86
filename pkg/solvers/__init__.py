"""
Numerical core: stencils, Adams-Bashforth schemes, exact solutions,
the recurrent stencil network and its training.
"""

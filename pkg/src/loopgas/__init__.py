'''loopgas: a numerical laboratory for interacting random-loop ensembles.

Implements the random-loop representation of the lattice Bose gas
(grid-duration loops) and of classical scalar field theories
(continuous-duration loops), exact small-instance oracles (dense
many-body diagonalization, Gaussian field sampling, single-site
quadrature), a cluster-expansion engine, and the infinite-mass
weighted-particle gas, together with convergence experiments tying
them all together.
'''

__version__ = "0.1.0"

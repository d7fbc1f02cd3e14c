"""mdlab: a desk-scale laboratory for multiplicative Diophantine counting.

Library layout:

- domains: parameter schedules, the diagonal flow, domain-set membership
- volumes: closed-form areas/volumes with quadrature and MC oracles
- counting: exact solution counters and the lattice-point reformulation
- tessellation: shell-tile decomposition of the hyperbolic strip
- heights: lattice minima s1/s2/s3, heights, point-counting transforms
- controlled: perturbation-stable set classes and the boundary sandwich
- correlations: shifted-lattice correlation identities and kernel sums
- schmidt: sub-quadratic weights, dyadic covers, moment pipeline
- experiments: seeded, thread-invariant Monte Carlo experiments
- cli: the ``mdlab`` command-line entry point
"""

__version__ = "0.1.0"

"""Benchmark networks and dataset plumbing for the simulator.

Submodules:

    idx       IDX tensor files (gzip-transparent), MNIST convenience loader
    encode    Poisson spike-train encoders for intensity images
    netbuild  bulk memory-image builders shared by the benchmark networks
    mnist     quad-classifier MNIST benchmark (rate and rank-order coding)
    patterns  4-orientation conv/pool network with 8-pattern online learning
"""
from . import encode, idx, mnist, netbuild, patterns  # noqa: F401

"""spikemesh: event-driven simulator of a quad-core binary-weight spiking
neuromorphic processor — bit-accurate cores, stochastic on-chip learning,
hierarchical L0/L1/L2 routing across a chip mesh, and a calibrated
power/energy model."""

__version__ = "0.1.0"

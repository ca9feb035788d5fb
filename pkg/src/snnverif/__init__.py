"""Verification workbench for probabilistic spiking neural networks."""

"""Quasiperiodic disturbance observer: design, frequency response, sensitivity integrals, simulation."""

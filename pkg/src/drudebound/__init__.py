"""Conserved charges of the spin-1/2 XXZ chain and Mazur-type lower bounds
on the spin Drude weight, with exact-diagonalization cross checks."""

__version__ = "0.1.0"

"""Exceptions raised by the solvers and the oracle."""


class ResonanceError(ValueError):
    """Averaging hit a resonant term that the caller did not route."""


class LevelCrossingError(ResonanceError):
    def __init__(self, m: int, n: int, tau: float, gap: float):
        super().__init__(f"levels {m} and {n} come within {gap:.3g} of each other at tau={tau:.6g}")
        self.m, self.n, self.tau, self.gap = m, n, tau, gap


class IntegrationError(RuntimeError):
    """The oracle integrator failed or lost unitarity."""

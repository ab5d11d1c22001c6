import numpy as np


class Rng:
    """Seeded random stream; identical seeds replay identical draws."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.state = np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, *keys: int) -> "Rng":
        """Independent child stream for a (seed, *keys) path."""
        sequence = np.random.SeedSequence([self.seed, *[int(k) for k in keys]])
        return Rng(int(sequence.generate_state(1, dtype=np.uint64)[0]))

    def random(self, shape) -> np.ndarray:
        return self.state.random(shape)

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        return self.state.uniform(low, high, shape)

    def normal(self, mean: float, std: float, shape) -> np.ndarray:
        return self.state.normal(mean, std, shape)

    def integers(self, low: int, high: int, size=None):
        return self.state.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.state.permutation(n)

    def choice(self, n: int, size: int, replace: bool = True) -> np.ndarray:
        return self.state.choice(n, size=size, replace=replace)

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed})"

"""A tiny, fully specified random number generator for scene synthesis.

SplitMix64 (Steele, Lea and Flood's 64-bit mixing generator): state
advances by the golden-gamma constant and each output is a finalizing
mix of the new state.  The algorithm is a dozen integer operations, so
any language reproduces the stream bit for bit; scenes generated from a
seed here can be regenerated anywhere.

Doubles are drawn from the top 53 bits of an output word, giving the
uniform [0, 1) grid representable in IEEE-754 binary64.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """The SplitMix64 finalizer: a bijective avalanche over 64-bit ints."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Deterministic stream of 64-bit words and derived uniforms."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return mix64(self._state)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        """One double, uniform in [low, high)."""
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def uniform_array(self, n: int) -> np.ndarray:
        """``n`` uniforms in [0, 1), bit-identical to n ``uniform()`` calls.

        The state after k steps is seed + k * gamma (mod 2^64), so the
        whole batch is one vectorized finalizer pass; the generator
        state advances exactly as if drawn one by one.
        """
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK
        return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def derive_seed(*parts: int) -> int:
    """Mix integer labels into a sub-stream seed.

    Feeding the same labels in the same order always yields the same
    seed, so per-frame and per-camera streams stay independent of each
    other and reproducible.
    """
    z = 0x243F6A8885A308D3  # arbitrary nonzero starting constant
    for p in parts:
        z = mix64(z ^ mix64(int(p) & _MASK))
    return z

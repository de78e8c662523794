"""Randomness sources consumed by the release mechanisms.

Production releases draw from the operating system CSPRNG. Seeded and
zero-noise sources exist for testing only and must be enabled explicitly
through the ``DPBUDGETER_TEST_MODES`` environment variable, so that
deterministic noise can never reach a real release by accident.
"""

from __future__ import annotations

import os
import random

TEST_MODES_ENV = "DPBUDGETER_TEST_MODES"

SECURE = "secure"
SEEDED = "seeded"
ZERO_NOISE = "zero-noise"


def test_modes_enabled() -> bool:
    return os.environ.get(TEST_MODES_ENV, "") == "1"


def _require_test_modes(mode: str) -> None:
    if not test_modes_enabled():
        raise RuntimeError(
            f"the {mode} randomness mode is a test facility; "
            f"set {TEST_MODES_ENV}=1 to enable it"
        )


class RandomSource:
    """Uniform-variate stream with an explicit mode.

    Use the classmethod constructors; the zero-noise source has no stream
    at all and is recognized by mechanisms via ``is_zero_noise``.
    """

    def __init__(self, mode: str, rng: random.Random | None):
        self.mode = mode
        self._rng = rng

    @classmethod
    def secure(cls) -> RandomSource:
        return cls(SECURE, random.SystemRandom())

    @classmethod
    def seeded(cls, seed: int) -> RandomSource:
        _require_test_modes(SEEDED)
        return cls(SEEDED, random.Random(seed))

    @classmethod
    def zero_noise(cls) -> RandomSource:
        _require_test_modes(ZERO_NOISE)
        return cls(ZERO_NOISE, None)

    @property
    def is_zero_noise(self) -> bool:
        return self.mode == ZERO_NOISE

    def uniform(self) -> float:
        """Next uniform variate in [0, 1)."""
        if self._rng is None:
            raise RuntimeError("the zero-noise source has no uniform stream")
        return self._rng.random()

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomSource(mode={self.mode!r})"

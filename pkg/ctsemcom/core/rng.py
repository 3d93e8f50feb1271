from enum import IntEnum
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

_U64 = Annotated[int, Field(ge=0, lt=2**64)]


class Substream(IntEnum):
    """Counter values used inside one trial."""

    FEATURES = 0
    CHANNEL = 1
    NOISE = 2
    NOISE_NEW = 3


class RngStream(BaseModel):
    """Counter-based random stream keyed by (seed, stream_id, counter).

    Streams with different keys are independent, so trials can be drawn in any
    order or in parallel without shared generator state.
    """

    model_config = ConfigDict(frozen=True)

    seed: _U64
    stream_id: _U64
    counter: _U64 = 0

    def generator(self) -> np.random.Generator:
        seed_sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, self.counter)
        )
        return np.random.Generator(np.random.Philox(seed_sequence))

    def advance(self, steps: int = 1) -> "RngStream":
        return self.model_copy(update={"counter": self.counter + steps})

    def substream(self, which: Substream) -> "RngStream":
        return self.model_copy(update={"counter": int(which)})


def trial_stream(seed: int, trial: int, which: Substream) -> RngStream:
    return RngStream(seed=seed, stream_id=trial, counter=int(which))

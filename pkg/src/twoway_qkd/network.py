"""Star generalization: one hub (Bob) shares a single key-message with any
number of leaf parties over independent simulated quantum links.

Seed splitting (see protocol.link_rng / protocol.hub_rng): a master seed
fans out into one independent stream per (link, purpose) via numpy
SeedSequence spawn keys, plus one hub stream for the shared key-message.
This makes link transcripts independent by construction: events on link i
cannot move the stream of link j, and a one-leaf star is bit-identical to
the two-party session. Links are processed sequentially; since every
operation is pure and streams are per-link, interleaved scheduling would
produce identical transcripts.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .channel import EveStrategy, NoiseModel
from .protocol import (
    RunConfig,
    SessionResult,
    alice_prepare,
    bob_build_key_message,
    complete_round_trip,
    hub_rng,
    link_rng,
)
from .qubit import PureState, QubitRegister

TO_HUB = 0
TO_LEAF = 1

# Wire layout (little-endian), 43 bytes per frame:
#   link id     uint16
#   direction   uint8   (0 = to-hub, 1 = to-leaf)
#   sequence    uint64
#   amplitudes  4 x float64 (re0, im0, re1, im1)
_FRAME_STRUCT = struct.Struct("<HBQdddd")
FRAME_SIZE = _FRAME_STRUCT.size


@dataclass(frozen=True)
class WireFrame:
    """One qubit in transit on one link, as delivered to the receiver."""

    link_id: int
    direction: int
    sequence: int
    amp0: complex
    amp1: complex

    def __post_init__(self) -> None:
        if not 0 <= self.link_id < 1 << 16:
            raise ValueError("link_id must fit in 16 bits")
        if self.direction not in (TO_HUB, TO_LEAF):
            raise ValueError("direction must be 0 (to-hub) or 1 (to-leaf)")
        if not 0 <= self.sequence < 1 << 64:
            raise ValueError("sequence must fit in 64 bits")
        norm = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("payload must be a normalized state")

    def pack(self) -> bytes:
        return _FRAME_STRUCT.pack(
            self.link_id, self.direction, self.sequence,
            self.amp0.real, self.amp0.imag, self.amp1.real, self.amp1.imag,
        )

    @classmethod
    def unpack(cls, data: bytes) -> "WireFrame":
        link_id, direction, sequence, re0, im0, re1, im1 = _FRAME_STRUCT.unpack(data)
        return cls(link_id, direction, sequence, complex(re0, im0), complex(re1, im1))

    def payload(self) -> PureState:
        return PureState(self.amp0, self.amp1)


@dataclass(frozen=True)
class LinkSettings:
    """Channel conditions on one hub-leaf link."""

    noise_forward: NoiseModel = NoiseModel()
    noise_backward: NoiseModel = NoiseModel()
    eve: EveStrategy = EveStrategy.absent()


@dataclass(frozen=True)
class Topology:
    hub: str = "bob"
    leaves: tuple[str, ...] = ()
    links: dict = field(default_factory=dict)  # leaf name -> LinkSettings

    def __post_init__(self) -> None:
        if not self.leaves:
            raise ValueError("topology needs at least one leaf")
        if len(set(self.leaves)) != len(self.leaves):
            raise ValueError("leaf identifiers must be unique")
        if self.hub in self.leaves:
            raise ValueError("hub cannot also be a leaf")
        unknown = set(self.links) - set(self.leaves)
        if unknown:
            raise ValueError(f"link settings for unknown leaves: {sorted(unknown)}")
        if len(self.leaves) >= 1 << 16:
            raise ValueError("at most 65535 leaves (16-bit link ids)")

    def link_settings(self, leaf: str) -> LinkSettings:
        return self.links.get(leaf, LinkSettings())


@dataclass(frozen=True)
class LeafOutcome:
    leaf: str
    link_id: int
    result: SessionResult
    frames: tuple[WireFrame, ...]

    def frames_bytes(self) -> bytes:
        return b"".join(f.pack() for f in self.frames)


@dataclass(frozen=True)
class StarSessionResult:
    key_message: np.ndarray
    outcomes: dict  # leaf name -> LeafOutcome

    @property
    def accepted_leaves(self) -> list[str]:
        return [name for name, o in self.outcomes.items() if o.result.accepted]


def _register_frames(link_id: int, direction: int, register: QubitRegister) -> tuple[WireFrame, ...]:
    return tuple(
        WireFrame(link_id, direction, k, complex(register.amp0[k]), complex(register.amp1[k]))
        for k in range(len(register))
    )


def run_star_session(
    topology: Topology,
    config: RunConfig,
    per_leaf_pools: dict | None = None,
    seed: int | None = None,
    record_frames: bool = True,
) -> StarSessionResult:
    """One hub round with every leaf.

    Bob draws a single key-message from the hub stream and encodes it onto
    every link's qubits; each leaf prepares, measures, and derives with its
    own streams. A tag failure on one link aborts only that leaf.
    """
    if seed is None:
        seed = config.seed
    per_leaf_pools = per_leaf_pools or {}

    key_message = bob_build_key_message(config, hub_rng(seed))

    outcomes: dict[str, LeafOutcome] = {}
    for link_id, leaf in enumerate(topology.leaves):
        leaf_config = config
        if leaf in per_leaf_pools:
            leaf_config = RunConfig(
                n_bits=config.n_bits,
                repetition=config.repetition,
                variant=config.variant,
                basis_pool=tuple(per_leaf_pools[leaf]),
                tag_length=config.tag_length,
                seed=seed,
                tag_bits=config.tag_bits,
            )
        settings = topology.link_settings(leaf)
        prep = alice_prepare(leaf_config, link_rng(seed, link_id, 0))
        result = complete_round_trip(
            leaf_config,
            prep,
            key_message,
            settings.noise_forward,
            settings.noise_backward,
            settings.eve,
            forward_rng=link_rng(seed, link_id, 1),
            eve_rng=link_rng(seed, link_id, 2),
            backward_rng=link_rng(seed, link_id, 3),
            measure_rng=link_rng(seed, link_id, 4),
        )
        frames: tuple[WireFrame, ...] = ()
        if record_frames:
            frames = _register_frames(link_id, TO_HUB, result.delivered_to_bob) + _register_frames(
                link_id, TO_LEAF, result.delivered_to_alice
            )
        outcomes[leaf] = LeafOutcome(leaf, link_id, result, frames)
    return StarSessionResult(key_message=key_message, outcomes=outcomes)

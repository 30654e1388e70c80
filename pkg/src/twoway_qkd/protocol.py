"""Two-party protocol: preparation, key-message encoding, measurement and
derivation, tamper tags.

One session is a single round trip. Alice encodes a random bit string into
qubits using secretly chosen bases and sends them out; Bob encodes his
key-message by applying XZ (bit value 1) or nothing (bit value 0) and sends
them back; Alice measures in her original bases and XORs away her own bits.

Three variants:

* V1 - one qubit per message bit, exact in the noiseless case.
* V2 - each message bit is repeated over a contiguous block of t qubits;
  decoding is majority vote per block, with exact ties flagged as erasures
  in a parity string p that travels back to Bob over a classical side
  channel (the protocol's one classical message). Both parties then replace
  erased positions by pivot-XOR resolution.
* V3 - the whole message is encoded t times in consecutive copies;
  decoding is per-position majority over the copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import BACKWARD, FORWARD, EveObservation, EveStrategy, NoiseModel, perturb_register, eve_tap_register
from .qubit import PAULI_TAGS, Basis, QubitRegister, Rng, XZ

V1 = "V1"
V2 = "V2"
V3 = "V3"
VARIANTS = (V1, V2, V3)

# Seed splitting: one independent stream per (link, purpose) from the master
# seed, via SeedSequence spawn keys. Purposes: 0 preparation, 1 forward-leg
# noise, 2 Eve, 3 backward-leg noise, 4 measurement. The hub key-message
# stream uses a key no link can collide with. A two-party session is link 0.
HUB_SPAWN_KEY = (1 << 16, 0)


def link_rng(seed: int, link: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(link, purpose)))


def hub_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=HUB_SPAWN_KEY))


class AllErasuresError(ValueError):
    """Every block tied: no pivot exists for erasure resolution."""


def as_bits(values) -> np.ndarray:
    """Coerce to a uint8 0/1 array; rejects anything else."""
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit string must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bit string entries must be 0 or 1")
    return arr


def bits_to_text(bits) -> str:
    return "".join(str(int(b)) for b in bits)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one protocol session.

    n_bits is the key-message length N; repetition is the factor t. For V1
    the session still moves t*N qubits and the key-message spans all of
    them (t is just part of the total length); for V2/V3 the message is N
    bits carried redundantly by t*N qubits.
    """

    n_bits: int
    repetition: int = 1
    variant: str = V1
    basis_pool: tuple[Basis, ...] = (Basis(0.0),)
    tag_length: int = 0
    seed: int = 0
    tag_bits: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if self.repetition < 1:
            raise ValueError("repetition must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not self.basis_pool:
            raise ValueError("basis pool must be non-empty")
        angles = [b.theta for b in self.basis_pool]
        if len(set(angles)) != len(angles):
            raise ValueError("basis pool angles must be pairwise distinct")
        if not 0 <= self.tag_length <= self.message_length:
            raise ValueError("tag_length must lie in [0, message length]")
        if self.tag_bits is not None and len(self.tag_bits) != self.tag_length:
            raise ValueError("tag_bits length must equal tag_length")

    @property
    def qubit_count(self) -> int:
        return self.repetition * self.n_bits

    @property
    def message_length(self) -> int:
        return self.qubit_count if self.variant == V1 else self.n_bits

    @property
    def pool_angles(self) -> np.ndarray:
        return np.array([b.theta for b in self.basis_pool])

    def resolved_tag_bits(self) -> np.ndarray:
        """The pre-agreed check sequence; defaults to alternating 1,0,1,0..."""
        if self.tag_bits is not None:
            return as_bits(self.tag_bits)
        return np.fromiter(((k + 1) % 2 for k in range(self.tag_length)), np.uint8, self.tag_length)


@dataclass(frozen=True)
class PreparationRecord:
    """Alice's phase-I output: bits a, basis indices b, encoded qubits."""

    a: np.ndarray
    b: np.ndarray
    register: QubitRegister

    @property
    def qubits(self) -> list:
        return self.register.states()


def alice_prepare(config: RunConfig, rng: Rng) -> PreparationRecord:
    """Draw a and b uniformly and encode qubit k as bit a[k] in basis b[k]."""
    n = config.qubit_count
    a = rng.integers(0, 2, size=n, dtype=np.uint8)
    b = rng.integers(0, len(config.basis_pool), size=n, dtype=np.int64)
    register = QubitRegister.encode(a, config.pool_angles[b])
    return PreparationRecord(a, b, register)


def bob_build_key_message(config: RunConfig, rng: Rng) -> np.ndarray:
    """Random payload with the agreed tag sequence in the last positions."""
    m = rng.integers(0, 2, size=config.message_length, dtype=np.uint8)
    if config.tag_length:
        m[config.message_length - config.tag_length :] = config.resolved_tag_bits()
    return m


def bob_encode_v1(m, register: QubitRegister) -> QubitRegister:
    """Apply XZ to qubit k exactly when m[k] = 1."""
    m = as_bits(m)
    if len(m) != len(register):
        raise ValueError(f"key-message length {len(m)} != qubit count {len(register)}")
    return register.apply_pauli(XZ, mask=m == 1)


def bob_encode_v2(m, register: QubitRegister, t: int) -> QubitRegister:
    """Apply XZ to the contiguous t-qubit block of every set message bit."""
    m = as_bits(m)
    if len(register) != t * len(m):
        raise ValueError(f"qubit count {len(register)} != t*N = {t * len(m)}")
    return register.apply_pauli(XZ, mask=np.repeat(m, t) == 1)


def bob_encode_v3(m, register: QubitRegister, t: int) -> QubitRegister:
    """Encode the whole message into each of t consecutive N-qubit copies."""
    m = as_bits(m)
    if len(register) != t * len(m):
        raise ValueError(f"qubit count {len(register)} != t*N = {t * len(m)}")
    return register.apply_pauli(XZ, mask=np.tile(m, t) == 1)


def bob_encode(config: RunConfig, m, register: QubitRegister) -> QubitRegister:
    if config.variant == V1:
        return bob_encode_v1(m, register)
    if config.variant == V2:
        return bob_encode_v2(m, register, config.repetition)
    return bob_encode_v3(m, register, config.repetition)


def alice_measure(register: QubitRegister, prep: PreparationRecord, config: RunConfig, rng: Rng) -> np.ndarray:
    """Measure qubit k in the basis Alice prepared it in."""
    if len(register) != len(prep.a):
        raise ValueError("qubit count does not match the preparation record")
    return register.measure(config.pool_angles[prep.b], rng)


def derive_v1(c, a) -> np.ndarray:
    c, a = as_bits(c), as_bits(a)
    if len(c) != len(a):
        raise ValueError("c and a must have equal length")
    return c ^ a


def derive_v2(c, a, t: int, n_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Majority-decode N blocks of t bits; exact ties become erasures.

    Returns (m_prime, p): decoded message and the erasure string, where
    p[s] = 1 marks a tied block (decoded as 0 by convention).
    """
    M = derive_v1(c, a)
    if len(M) != t * n_bits:
        raise ValueError("string length must equal t*N")
    counts = M.reshape(n_bits, t).sum(axis=1)
    m_prime = (2 * counts > t).astype(np.uint8)
    p = (2 * counts == t).astype(np.uint8)
    return m_prime, p


def _resolve(bits, p) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shared erasure resolution.

    Pivot k = the lowest non-erased index. Non-erased bits are retained in
    order; every erased position s is replaced by bits[k] XOR placeholder,
    where the erased source value is the decoder's fixed placeholder 0 on
    both sides (so the two parties compute identical strings). Output C is
    retained bits followed by resolved bits, ascending.
    """
    bits, p = as_bits(bits), as_bits(p)
    if len(bits) != len(p):
        raise ValueError("value and erasure strings must have equal length")
    clear = np.flatnonzero(p == 0)
    if clear.size == 0:
        raise AllErasuresError("all positions erased; no pivot available")
    pivot = int(clear[0])
    erased = np.flatnonzero(p == 1)
    masked = bits.copy()
    masked[erased] = 0
    resolved = masked[pivot] ^ masked[erased]
    C = np.concatenate([masked[clear], resolved]).astype(np.uint8)
    return C, clear, erased


def resolve_erasures(m_prime, p) -> np.ndarray:
    """Alice's side: build C from the decoded message and erasure string."""
    return _resolve(m_prime, p)[0]


def bob_resolve(m, p) -> np.ndarray:
    """Bob's side: build C from his key-message and Alice's erasure string.

    Erased positions contribute the same placeholder value the decoder used,
    which keeps the two parties' C identical whenever the non-erased blocks
    decoded correctly.
    """
    return _resolve(m, p)[0]


def derive_v3(c, a, t: int, n_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-position majority over the t message copies.

    Returns (m, ties); tied positions (even t) decode to 0 and are flagged.
    """
    M = derive_v1(c, a)
    if len(M) != t * n_bits:
        raise ValueError("string length must equal t*N")
    counts = M.reshape(t, n_bits).sum(axis=0)
    m = (2 * counts > t).astype(np.uint8)
    ties = (2 * counts == t).astype(np.uint8)
    return m, ties


def verify_tag(derived, config: RunConfig) -> bool:
    """Accept iff the tag positions of the derived message match the agreed
    sequence exactly. A reject signals suspected tampering, not an error."""
    if config.tag_length == 0:
        return True
    derived = as_bits(derived)
    if config.tag_length > len(derived):
        raise ValueError("tag longer than derived message")
    return bool(np.array_equal(derived[len(derived) - config.tag_length :], config.resolved_tag_bits()))


@dataclass(frozen=True)
class DerivationRecord:
    """Alice's phase-III output, everything derived from (c, a)."""

    c: np.ndarray
    M: np.ndarray
    m_prime: np.ndarray
    p: np.ndarray | None = None
    C: np.ndarray | None = None
    ties: np.ndarray | None = None
    retained_positions: np.ndarray | None = None
    resolved_positions: np.ndarray | None = None

    def blocks(self, t: int, n_bits: int, variant: str) -> np.ndarray:
        """The strings d_s the decoder voted over."""
        if variant == V2:
            return self.M.reshape(n_bits, t)
        if variant == V3:
            return self.M.reshape(t, n_bits)
        return self.M.reshape(1, -1)


def derive(config: RunConfig, c, a) -> DerivationRecord:
    c, a = as_bits(c), as_bits(a)
    if config.variant == V1:
        M = derive_v1(c, a)
        return DerivationRecord(c=c, M=M, m_prime=M, C=M)
    if config.variant == V2:
        m_prime, p = derive_v2(c, a, config.repetition, config.n_bits)
        try:
            C, clear, erased = _resolve(m_prime, p)
        except AllErasuresError:
            return DerivationRecord(c=c, M=c ^ a, m_prime=m_prime, p=p, C=None)
        return DerivationRecord(
            c=c, M=c ^ a, m_prime=m_prime, p=p, C=C,
            retained_positions=clear, resolved_positions=erased,
        )
    m_prime, ties = derive_v3(c, a, config.repetition, config.n_bits)
    return DerivationRecord(c=c, M=c ^ a, m_prime=m_prime, C=m_prime, ties=ties)


@dataclass(frozen=True)
class SessionResult:
    """Everything one round trip produced, enough for bit-exact replay checks."""

    config: RunConfig
    prep: PreparationRecord
    key_message: np.ndarray
    derivation: DerivationRecord
    accepted: bool
    abort_reason: str | None
    bob_final: np.ndarray | None
    alice_final: np.ndarray | None
    noise_codes_forward: np.ndarray
    noise_codes_backward: np.ndarray
    eve_forward: EveObservation | None
    eve_backward: EveObservation | None
    delivered_to_bob: QubitRegister
    delivered_to_alice: QubitRegister
    bob_ops: np.ndarray = field(default=None)  # uint8 mask of XZ applications

    @property
    def agreement(self) -> bool:
        return (
            self.alice_final is not None
            and self.bob_final is not None
            and bool(np.array_equal(self.alice_final, self.bob_final))
        )

    def transcript_text(self) -> str:
        """Structured-text session transcript; stable across replays."""
        cfg = self.config
        d = self.derivation
        lines = [
            "# twoway-qkd session transcript v1",
            f"variant={cfg.variant}",
            f"n_bits={cfg.n_bits}",
            f"repetition={cfg.repetition}",
            f"seed={cfg.seed}",
            "basis_pool=" + ",".join(repr(b.theta) for b in cfg.basis_pool),
            f"tag_length={cfg.tag_length}",
            "tag_bits=" + bits_to_text(cfg.resolved_tag_bits()),
            f"accepted={int(self.accepted)}",
            "abort_reason=" + (self.abort_reason or ""),
            "a=" + bits_to_text(self.prep.a),
            "b=" + ",".join(str(int(x)) for x in self.prep.b),
            "m=" + bits_to_text(self.key_message),
            "c=" + bits_to_text(d.c),
            "M=" + bits_to_text(d.M),
            "m_prime=" + bits_to_text(d.m_prime),
            "p=" + (bits_to_text(d.p) if d.p is not None else ""),
            "C=" + (bits_to_text(d.C) if d.C is not None else ""),
            "ties=" + (bits_to_text(d.ties) if d.ties is not None else ""),
            "columns=index basis_index sent_bit noise_fwd eve_fwd bob_op noise_bwd eve_bwd measured_bit",
        ]
        fwd_eve = "E" if self.eve_forward is not None else "-"
        bwd_eve = "E" if self.eve_backward is not None else "-"
        for k in range(len(self.prep.a)):
            lines.append(
                f"{k} {int(self.prep.b[k])} {int(self.prep.a[k])} "
                f"{PAULI_TAGS[int(self.noise_codes_forward[k])]} {fwd_eve} "
                f"{'XZ' if self.bob_ops[k] else 'I'} "
                f"{PAULI_TAGS[int(self.noise_codes_backward[k])]} {bwd_eve} "
                f"{int(d.c[k])}"
            )
        return "\n".join(lines) + "\n"


def complete_round_trip(
    config: RunConfig,
    prep: PreparationRecord,
    key_message,
    noise_forward: NoiseModel,
    noise_backward: NoiseModel,
    eve: EveStrategy,
    forward_rng: Rng,
    eve_rng: Rng,
    backward_rng: Rng,
    measure_rng: Rng,
) -> SessionResult:
    """Run phases II and III against an already-prepared qubit string.

    Per leg, channel noise is applied first and Eve's tap second. The
    separate random sources exist so the star network can give each link
    independent streams; the two-party entry point passes one source for
    all four.
    """
    m = as_bits(key_message)

    reg, fwd_codes = perturb_register(prep.register, noise_forward, forward_rng)
    eve_fwd = None
    if eve.attacks(FORWARD):
        reg, eve_fwd = eve_tap_register(reg, eve, eve_rng)
    delivered_to_bob = reg

    reg = bob_encode(config, m, reg)
    bob_ops = (
        as_bits(m) if config.variant == V1
        else np.repeat(m, config.repetition) if config.variant == V2
        else np.tile(m, config.repetition)
    )

    reg, bwd_codes = perturb_register(reg, noise_backward, backward_rng)
    eve_bwd = None
    if eve.attacks(BACKWARD):
        reg, eve_bwd = eve_tap_register(reg, eve, eve_rng)
    delivered_to_alice = reg

    c = alice_measure(reg, prep, config, measure_rng)
    record = derive(config, c, prep.a)

    abort_reason = None
    if record.C is None:
        abort_reason = "all_erasures"
        bob_final = None
    elif config.variant == V2:
        bob_final = bob_resolve(m, record.p)
    else:
        bob_final = m
    accepted = abort_reason is None and verify_tag(record.m_prime, config)
    if abort_reason is None and not accepted:
        abort_reason = "tag_mismatch"

    return SessionResult(
        config=config,
        prep=prep,
        key_message=m,
        derivation=record,
        accepted=accepted,
        abort_reason=abort_reason,
        bob_final=bob_final,
        alice_final=record.C,
        noise_codes_forward=fwd_codes,
        noise_codes_backward=bwd_codes,
        eve_forward=eve_fwd,
        eve_backward=eve_bwd,
        delivered_to_bob=delivered_to_bob,
        delivered_to_alice=delivered_to_alice,
        bob_ops=bob_ops,
    )


def run_session(
    config: RunConfig,
    noise_forward: NoiseModel | None = None,
    noise_backward: NoiseModel | None = None,
    eve: EveStrategy | None = None,
    key_message=None,
    rng: Rng | None = None,
) -> SessionResult:
    """One two-party session, fully determined by (config, seed).

    With no explicit source, random streams follow the link-0 seed-splitting
    scheme, so this is bit-identical to a one-leaf star session. An explicit
    rng is consumed sequentially in the fixed order (a, b, m, forward leg,
    backward leg, measurement).
    """
    noise_forward = noise_forward or NoiseModel()
    noise_backward = noise_backward or NoiseModel()
    eve = eve or EveStrategy.absent()
    if rng is None:
        prep = alice_prepare(config, link_rng(config.seed, 0, 0))
        m = (
            bob_build_key_message(config, hub_rng(config.seed))
            if key_message is None
            else as_bits(key_message)
        )
        return complete_round_trip(
            config, prep, m, noise_forward, noise_backward, eve,
            forward_rng=link_rng(config.seed, 0, 1),
            eve_rng=link_rng(config.seed, 0, 2),
            backward_rng=link_rng(config.seed, 0, 3),
            measure_rng=link_rng(config.seed, 0, 4),
        )
    prep = alice_prepare(config, rng)
    m = bob_build_key_message(config, rng) if key_message is None else as_bits(key_message)
    return complete_round_trip(
        config, prep, m, noise_forward, noise_backward, eve,
        forward_rng=rng, eve_rng=rng, backward_rng=rng, measure_rng=rng,
    )

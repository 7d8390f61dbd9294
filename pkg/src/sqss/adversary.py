"""Catalog of adversarial strategies for both circular protocols.

Every attack is expressed as a combination of channel-leg interceptors and
dishonest-party behavior overrides, with the adversary's acquired knowledge
tracked explicitly so that attack payoff can be scored against the honest
parties' actual bits.

Attack identifiers are stable strings used in configs and on the CLI:

    a.mr.bob.1     a.mr.bob.2     a.mr.charlie.1   a.mr.charlie.2
    a.ir.bob       a.ir.charlie.1 a.ir.charlie.2
    a.mr.eve.<leg> a.ir.eve.<leg>           (leg in 1..3)
    b.mr.bob       b.mr.charlie   b.ir.bob         b.ir.charlie
    b.mr.eve.<leg> b.ir.eve.<leg>
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .qstate import (
    Basis,
    CompositeState,
    PureState,
    check_unitary,
    lift,
    measure,
    measure_qubit,
    zstate,
)
from .runtime import Choice, Leg, LEG_ORDER


class UnsupportedAttackError(ValueError):
    """The requested actor/variant/protocol pairing is not in the catalog."""


@dataclass(frozen=True)
class UnitaryPair:
    """Two joint qubit-probe unitaries applied on an outbound and a return leg.

    Protocol A pairs act on legs (alice_to_bob, charlie_to_alice); protocol B
    pairs act on legs (bob_to_charlie, charlie_to_alice).
    """

    first: np.ndarray
    second: np.ndarray
    probe_dim: int
    protocol: str  # "A" | "B"

    def __post_init__(self):
        for name, u in (("first", self.first), ("second", self.second)):
            u = np.asarray(u, dtype=complex)
            if u.shape != (2 * self.probe_dim, 2 * self.probe_dim):
                raise ValueError(f"{name} unitary has shape {u.shape}, "
                                 f"expected {(2 * self.probe_dim,) * 2}")
            check_unitary(u)
            u = u.copy()
            u.setflags(write=False)
            object.__setattr__(self, name, u)
        if self.protocol not in ("A", "B"):
            raise ValueError(f"unknown protocol {self.protocol!r}")

    @property
    def legs(self) -> tuple[Leg, Leg]:
        if self.protocol == "A":
            return (Leg.ALICE_TO_BOB, Leg.CHARLIE_TO_ALICE)
        return (Leg.BOB_TO_CHARLIE, Leg.CHARLIE_TO_ALICE)


@dataclass(frozen=True)
class AttackSpec:
    """One entry of the attack catalog (or an entangle-measure parameterization)."""

    protocol: str                       # "A" | "B"
    kind: str                           # "none" | "mr" | "ir" | "em"
    actor: Optional[str] = None         # "bob" | "charlie" | "eve"
    variant: Optional[int] = None
    pair: Optional[UnitaryPair] = None

    def __post_init__(self):
        if self.protocol not in ("A", "B"):
            raise UnsupportedAttackError(f"unknown protocol {self.protocol!r}")
        if self.kind == "none":
            return
        if self.kind == "em":
            if self.pair is None or self.pair.protocol != self.protocol:
                raise UnsupportedAttackError("entangle-measure spec needs a matching UnitaryPair")
            if self.actor not in (None, "bob", "charlie", "eve"):
                raise UnsupportedAttackError(f"bad actor {self.actor!r}")
            return
        if self.kind not in ("mr", "ir"):
            raise UnsupportedAttackError(f"unknown attack kind {self.kind!r}")
        if self.actor == "eve":
            if self.variant not in (1, 2, 3):
                raise UnsupportedAttackError("eve attacks take a leg number 1..3")
            return
        if self.protocol == "A":
            if self.kind == "mr":
                if self.actor not in ("bob", "charlie") or self.variant not in (1, 2):
                    raise UnsupportedAttackError(
                        f"protocol A measure-resend: bad ({self.actor}, {self.variant})")
            else:
                if self.actor == "bob" and self.variant is None:
                    return
                if self.actor == "charlie" and self.variant in (1, 2):
                    return
                raise UnsupportedAttackError(
                    f"protocol A intercept-resend: bad ({self.actor}, {self.variant})")
        else:
            if self.actor not in ("bob", "charlie") or self.variant is not None:
                raise UnsupportedAttackError(
                    f"protocol B {self.kind}: bad ({self.actor}, {self.variant})")

    @property
    def attack_id(self) -> str:
        if self.kind == "none":
            return f"{self.protocol.lower()}.none"
        if self.kind == "em":
            return f"{self.protocol.lower()}.em"
        parts = [self.protocol.lower(), self.kind, self.actor]
        if self.variant is not None:
            parts.append(str(self.variant))
        return ".".join(parts)


def parse_attack_id(attack_id: str) -> AttackSpec:
    parts = attack_id.split(".")
    if len(parts) < 2 or parts[0] not in ("a", "b"):
        raise UnsupportedAttackError(f"malformed attack id {attack_id!r}")
    protocol = parts[0].upper()
    if parts[1] == "none" and len(parts) == 2:
        return AttackSpec(protocol, "none")
    if len(parts) not in (3, 4):
        raise UnsupportedAttackError(f"malformed attack id {attack_id!r}")
    kind, actor = parts[1], parts[2]
    variant = int(parts[3]) if len(parts) == 4 else None
    return AttackSpec(protocol, kind, actor, variant)


def catalog_ids(protocol: Optional[str] = None) -> list[str]:
    """All measure-resend / intercept-resend attack ids, optionally per protocol."""
    ids_a = (["a.mr.bob.1", "a.mr.bob.2", "a.mr.charlie.1", "a.mr.charlie.2",
              "a.ir.bob", "a.ir.charlie.1", "a.ir.charlie.2"]
             + [f"a.mr.eve.{k}" for k in (1, 2, 3)]
             + [f"a.ir.eve.{k}" for k in (1, 2, 3)])
    ids_b = (["b.mr.bob", "b.mr.charlie", "b.ir.bob", "b.ir.charlie"]
             + [f"b.mr.eve.{k}" for k in (1, 2, 3)]
             + [f"b.ir.eve.{k}" for k in (1, 2, 3)])
    if protocol is None:
        return ids_a + ids_b
    return ids_a if protocol.upper() == "A" else ids_b


# Sources an adversary may legitimately learn bits from.  Anything outside
# this set would mean the attack peeked at another party's private state.
ALLOWED_SOURCES = frozenset({"own-measurement", "intercept-measurement",
                             "own-fake", "retained-measurement"})


@dataclass
class AdversaryKnowledge:
    """Bits and particles an attacker has legitimately acquired during one run."""

    recorded: dict = field(default_factory=dict)    # position -> bit
    fake_bits: dict = field(default_factory=dict)   # position -> bit of the fake sent
    retained: dict = field(default_factory=dict)    # position -> genuine state kept back
    provenance: dict = field(default_factory=dict)  # position -> source tag

    def record(self, pos: int, bit: int, source: str) -> None:
        assert source in ALLOWED_SOURCES, source
        self.recorded[pos] = bit
        self.provenance[pos] = source

    def note_fake(self, pos: int, bit: int) -> None:
        self.fake_bits[pos] = bit
        self.provenance.setdefault(pos, "own-fake")

    def keep(self, pos: int, state) -> None:
        self.retained[pos] = state

    def measure_retained(self, pos: int, rng: np.random.Generator) -> int:
        state = self.retained[pos]
        if isinstance(state, CompositeState):
            bit, _ = measure_qubit(state, Basis.Z, rng)
        else:
            bit, _ = measure(state, Basis.Z, rng)
        self.record(pos, bit, "retained-measurement")
        return bit


# ---------------------------------------------------------------------------
# Protocol A parties


def _get_choice(record, role):
    return record.bob_choice if role == "bob" else record.charlie_choice


def _set_choice(record, role, choice):
    if role == "bob":
        record.bob_choice = choice
    else:
        record.charlie_choice = choice


def _get_result(record, role):
    return record.bob_result if role == "bob" else record.charlie_result


def _set_result(record, role, bit):
    if role == "bob":
        record.bob_result = bit
    else:
        record.charlie_result = bit


def _set_announced(record, role, choice):
    if role == "bob":
        record.announced_bob_choice = choice
    else:
        record.announced_charlie_choice = choice


def _measure_in_flight(record, basis, rng):
    if isinstance(record.in_flight, CompositeState):
        bit, collapsed = measure_qubit(record.in_flight, basis, rng)
    else:
        bit, collapsed = measure(record.in_flight, basis, rng)
    record.in_flight = collapsed
    return bit


def _random_subset(total: int, size: int, rng: np.random.Generator) -> set[int]:
    return set(int(i) for i in rng.choice(total, size=size, replace=False))


class HonestPartyA:
    """Classical party for protocol A: MEASURE a random N-subset, REFLECT the rest."""

    def __init__(self, role: str, n_measure: int):
        self.role = role
        self.n_measure = n_measure

    def act(self, records, rng):
        chosen = _random_subset(len(records), self.n_measure, rng)
        for r in records:
            if r.index in chosen:
                _set_choice(r, self.role, Choice.MEASURE)
                _set_result(r, self.role, _measure_in_flight(r, Basis.Z, rng))
            else:
                _set_choice(r, self.role, Choice.REFLECT)

    def announce(self, records, rng):
        for r in records:
            _set_announced(r, self.role, _get_choice(r, self.role))

    def reported_result(self, record) -> int:
        return _get_result(record, self.role)


class MeasureAllPartyA(HonestPartyA):
    """Measure-resend insider: Z-measure every particle at its own step, then
    fabricate a MEASURE/REFLECT announcement of the honest sizes."""

    def __init__(self, role, n_measure, knowledge: AdversaryKnowledge):
        super().__init__(role, n_measure)
        self.knowledge = knowledge

    def act(self, records, rng):
        for r in records:
            _set_choice(r, self.role, Choice.MEASURE)
            bit = _measure_in_flight(r, Basis.Z, rng)
            _set_result(r, self.role, bit)
            self.knowledge.record(r.index, bit, "own-measurement")

    def announce(self, records, rng):
        fake_measure = _random_subset(len(records), self.n_measure, rng)
        for r in records:
            _set_announced(r, self.role, Choice.MEASURE if r.index in fake_measure
                           else Choice.REFLECT)


class ReflectAllPartyA(HonestPartyA):
    """Charlie's first measure-resend variant: Z-measure in transit before Bob
    (done by an interceptor), REFLECT everything at her own step, fabricate the
    announcement, and report the transit bits when asked for results."""

    def __init__(self, role, n_measure, knowledge: AdversaryKnowledge):
        super().__init__(role, n_measure)
        self.knowledge = knowledge

    def act(self, records, rng):
        for r in records:
            _set_choice(r, self.role, Choice.REFLECT)

    def announce(self, records, rng):
        fake_measure = _random_subset(len(records), self.n_measure, rng)
        for r in records:
            _set_announced(r, self.role, Choice.MEASURE if r.index in fake_measure
                           else Choice.REFLECT)

    def reported_result(self, record) -> int:
        return self.knowledge.recorded[record.index]


class SwapBackPartyA(HonestPartyA):
    """Charlie's second intercept-resend choice: run her step on the retained
    genuine particles instead of the ones arriving from Bob."""

    def __init__(self, role, n_measure, knowledge: AdversaryKnowledge):
        super().__init__(role, n_measure)
        self.knowledge = knowledge

    def act(self, records, rng):
        for r in records:
            # Bob's outgoing particle stays in her hand; the genuine one goes on.
            genuine = self.knowledge.retained.pop(r.index)
            self.knowledge.keep(r.index, r.in_flight)
            r.in_flight = genuine
        super().act(records, rng)


# ---------------------------------------------------------------------------
# Interceptors


def measure_all_interceptor(knowledge: AdversaryKnowledge, source: str):
    def intercept(batch, leg, rng):
        for pos, p in enumerate(batch):
            if hasattr(p, "in_flight"):
                bit = _measure_in_flight(p, Basis.Z, rng)
                knowledge.record(p.index, bit, source)
            else:
                bit = _z_collapse_particle(p, rng)
                knowledge.record(pos, bit, source)
        return batch
    return intercept


def _z_collapse_particle(particle, rng):
    """Z-measure a protocol B particle in flight."""
    if isinstance(particle.state, CompositeState):
        bit, collapsed = measure_qubit(particle.state, Basis.Z, rng)
    else:
        bit, collapsed = measure(particle.state, Basis.Z, rng)
    particle.state = collapsed
    return bit


def replace_with_fakes_interceptor(knowledge: AdversaryKnowledge,
                                   informed_bit=None):
    """Retain the genuine batch and substitute fresh Z-basis fakes.

    ``informed_bit(item, pos)`` may supply a known bit for a position (the
    intercept-resend attacker reuses its own measurement results there);
    elsewhere the fake is a uniformly random Z state.
    """
    def intercept(batch, leg, rng):
        for pos, p in enumerate(batch):
            is_record = hasattr(p, "in_flight")
            key = p.index if is_record else pos
            bit = informed_bit(p, pos) if informed_bit is not None else None
            if bit is None:
                bit = int(rng.integers(2))
            if is_record:
                knowledge.keep(key, p.in_flight)
                p.in_flight = zstate(bit)
            else:
                knowledge.keep(key, p.state)
                p.state = zstate(bit)
                p.tag = "FAKE"
                p.origin = None
                p.hidden_bit = None
            knowledge.note_fake(key, bit)
        return batch
    return intercept


def entangle_measure_interceptors(pair: UnitaryPair) -> dict:
    """Apply the pair's first unitary on its outbound leg and the second on the
    return leg; each particle carries its own probe, initially |e0>."""
    d = pair.probe_dim

    def attach_and_apply(state, u):
        if isinstance(state, PureState):
            state = lift(state, d)
        return CompositeState(u @ state.amps, state.dim_probe)

    def make(u):
        def intercept(batch, leg, rng):
            for p in batch:
                if hasattr(p, "in_flight"):
                    p.in_flight = attach_and_apply(p.in_flight, u)
                else:
                    p.state = attach_and_apply(p.state, u)
            return batch
        return intercept

    first_leg, second_leg = pair.legs
    return {first_leg: make(pair.first), second_leg: make(pair.second)}


# ---------------------------------------------------------------------------
# Protocol B parties


class HonestPartyB:
    """Protocol B classical party: insert n fresh Z-basis particles and apply a
    uniformly random shuffle; the order is withheld until publication."""

    SIFT_TAG = {"bob": "SIFT_B", "charlie": "SIFT_C"}

    def __init__(self, role: str, n: int):
        self.role = role
        self.n = n
        self.prepared_bits: list[int] = []
        self.order: list[tuple[str, int]] = []

    def fresh_particles(self, rng):
        from .protocol_b import TaggedParticle
        self.prepared_bits = [int(b) for b in rng.integers(2, size=self.n)]
        tag = self.SIFT_TAG[self.role]
        return [TaggedParticle(state=zstate(b), tag=tag, origin=j, hidden_bit=b)
                for j, b in enumerate(self.prepared_bits)]

    def process(self, incoming, rng):
        combined = list(incoming) + self.fresh_particles(rng)
        n_in = len(incoming)
        perm = [int(i) for i in rng.permutation(len(combined))]
        outgoing = [combined[i] for i in perm]
        self.order = [("incoming", i) if i < n_in else ("sift", i - n_in) for i in perm]
        return outgoing

    def published_order(self):
        return list(self.order)

    def reveal_prepared(self, final_pos: int, origin: int) -> int:
        return self.prepared_bits[origin]


class MeasureResendPartyB(HonestPartyB):
    """Protocol B Charlie measure-resend: Z-measure every incoming particle,
    resend the found states, then run the honest step."""

    def __init__(self, role, n, knowledge: AdversaryKnowledge):
        super().__init__(role, n)
        self.knowledge = knowledge

    def process(self, incoming, rng):
        for pos, p in enumerate(incoming):
            bit = _z_collapse_particle(p, rng)
            self.knowledge.record(pos, bit, "own-measurement")
        return super().process(incoming, rng)


class InterceptResendPartyB(HonestPartyB):
    """Protocol B Charlie intercept-resend: keep the incoming batch, send a full
    complement of fresh Z-basis fakes under a fabricated order, and lie about
    her own TEST particles using the fake bits."""

    def __init__(self, role, n, knowledge: AdversaryKnowledge):
        super().__init__(role, n)
        self.knowledge = knowledge

    def process(self, incoming, rng):
        from .protocol_b import TaggedParticle
        n_in = len(incoming)
        for pos, p in enumerate(incoming):
            self.knowledge.keep(pos, p.state)
        self.prepared_bits = [int(b) for b in rng.integers(2, size=self.n)]
        total = n_in + self.n
        fakes = []
        for pos in range(total):
            bit = int(rng.integers(2))
            self.knowledge.note_fake(pos, bit)
            fakes.append(TaggedParticle(state=zstate(bit), tag="FAKE", origin=None,
                                        hidden_bit=None))
        perm = [int(i) for i in rng.permutation(total)]
        self.order = [("incoming", i) if i < n_in else ("sift", i - n_in) for i in perm]
        return fakes

    def reveal_prepared(self, final_pos: int, origin: int) -> int:
        return self.knowledge.fake_bits[final_pos]


class LyingRevealPartyB(HonestPartyB):
    """Protocol B Bob intercept-resend: the honest insertion step, but TEST
    reveals quote the fake bits substituted on the return leg."""

    def __init__(self, role, n, knowledge: AdversaryKnowledge):
        super().__init__(role, n)
        self.knowledge = knowledge

    def reveal_prepared(self, final_pos: int, origin: int) -> int:
        if final_pos in self.knowledge.fake_bits:
            return self.knowledge.fake_bits[final_pos]
        return super().reveal_prepared(final_pos, origin)


# ---------------------------------------------------------------------------
# Attack plans


class AttackPlan:
    """Everything a protocol run needs to realize one AttackSpec."""

    def __init__(self, spec: AttackSpec):
        self.spec = spec
        self.knowledge = AdversaryKnowledge()
        self.interceptors: dict[Leg, object] = {}
        self._build()

    # -- construction -------------------------------------------------------

    def _build(self):
        spec = self.spec
        if spec.kind == "none":
            return
        if spec.kind == "em":
            self.interceptors = entangle_measure_interceptors(spec.pair)
            return
        builder = getattr(self, f"_build_{spec.protocol.lower()}_{spec.kind}")
        builder()

    def _eve_leg(self) -> Leg:
        return LEG_ORDER[self.spec.variant - 1]

    def _build_a_mr(self):
        spec = self.spec
        if spec.actor == "eve":
            self.interceptors[self._eve_leg()] = measure_all_interceptor(
                self.knowledge, "intercept-measurement")
        elif (spec.actor, spec.variant) == ("bob", 2):
            self.interceptors[Leg.CHARLIE_TO_ALICE] = measure_all_interceptor(
                self.knowledge, "intercept-measurement")
        elif (spec.actor, spec.variant) == ("charlie", 1):
            self.interceptors[Leg.ALICE_TO_BOB] = measure_all_interceptor(
                self.knowledge, "intercept-measurement")
        # bob.1 and charlie.2 are pure party overrides, handled in party_a()

    def _build_a_ir(self):
        spec = self.spec
        if spec.actor == "bob":
            def informed(record, pos):
                if record.bob_choice is Choice.MEASURE:
                    return record.bob_result
                return None
            self.interceptors[Leg.CHARLIE_TO_ALICE] = replace_with_fakes_interceptor(
                self.knowledge, informed)
        elif spec.actor == "charlie":
            self.interceptors[Leg.ALICE_TO_BOB] = replace_with_fakes_interceptor(
                self.knowledge)
        else:  # eve
            self.interceptors[self._eve_leg()] = replace_with_fakes_interceptor(
                self.knowledge)

    def _build_b_mr(self):
        spec = self.spec
        if spec.actor == "bob":
            self.interceptors[Leg.CHARLIE_TO_ALICE] = measure_all_interceptor(
                self.knowledge, "intercept-measurement")
        elif spec.actor == "eve":
            self.interceptors[self._eve_leg()] = measure_all_interceptor(
                self.knowledge, "intercept-measurement")
        # charlie's variant is a party override

    def _build_b_ir(self):
        spec = self.spec
        if spec.actor == "bob":
            self.interceptors[Leg.CHARLIE_TO_ALICE] = replace_with_fakes_interceptor(
                self.knowledge)
        elif spec.actor == "eve":
            self.interceptors[self._eve_leg()] = replace_with_fakes_interceptor(
                self.knowledge)
        # charlie's variant is a party override

    # -- parties ------------------------------------------------------------

    def party_a(self, role: str, n_measure: int) -> HonestPartyA:
        spec = self.spec
        if spec.protocol == "A" and spec.actor == role:
            if spec.kind == "mr":
                if (role, spec.variant) in (("bob", 1), ("charlie", 2)):
                    return MeasureAllPartyA(role, n_measure, self.knowledge)
                if (role, spec.variant) == ("charlie", 1):
                    return ReflectAllPartyA(role, n_measure, self.knowledge)
            elif spec.kind == "ir" and (role, spec.variant) == ("charlie", 2):
                return SwapBackPartyA(role, n_measure, self.knowledge)
        return HonestPartyA(role, n_measure)

    def party_b(self, role: str, n: int) -> HonestPartyB:
        spec = self.spec
        if spec.protocol == "B" and spec.actor == role:
            if spec.kind == "mr" and role == "charlie":
                return MeasureResendPartyB(role, n, self.knowledge)
            if spec.kind == "ir" and role == "charlie":
                return InterceptResendPartyB(role, n, self.knowledge)
            if spec.kind == "ir" and role == "bob":
                return LyingRevealPartyB(role, n, self.knowledge)
        return HonestPartyB(role, n)

    def interceptor(self, leg: Leg):
        return self.interceptors.get(leg)

    @property
    def target(self) -> Optional[str]:
        """Which key string the attack is after: k_b, k_c, or both (Eve)."""
        if self.spec.kind in ("none", "em") or self.spec.actor is None:
            return None
        return {"bob": "k_c", "charlie": "k_b", "eve": "both"}[self.spec.actor]

    # -- key guessing -------------------------------------------------------

    def guess_a(self, context, rng: np.random.Generator) -> dict[int, int]:
        """Best guess of the targeted key-case bits, from knowledge alone.

        ``context`` carries the key-relevant particle indices per case
        (``k_b_positions`` for Case 2, ``k_c_positions`` for Case 3).
        """
        spec = self.spec
        if spec.kind in ("none", "em"):
            return {}
        guesses: dict[int, int] = {}
        positions = []
        if self.target in ("k_b", "both"):
            positions += context.k_b_positions
        if self.target in ("k_c", "both"):
            positions += context.k_c_positions
        for idx in positions:
            bit = self._guess_bit_a(idx, idx in context.k_b_positions, rng)
            if bit is not None:
                guesses[idx] = bit
        return guesses

    def _guess_bit_a(self, idx, is_k_b: bool, rng) -> Optional[int]:
        spec = self.spec
        kn = self.knowledge
        if spec.kind == "mr":
            return kn.recorded.get(idx)
        # intercept-resend
        if spec.actor == "bob":
            # retained particles at Case 3 positions are Charlie's collapsed states
            if idx in kn.retained:
                return kn.measure_retained(idx, rng)
            return None
        if spec.actor == "charlie":
            # Bob measured her fakes, so his bits equal the fake bits
            return kn.fake_bits.get(idx)
        # eve intercept-resend: depends on which leg she replaced
        leg = self._eve_leg()
        if leg is Leg.ALICE_TO_BOB:
            return kn.fake_bits.get(idx)
        if leg is Leg.BOB_TO_CHARLIE:
            # Bob acted on the genuine particle, Charlie on the fake
            if is_k_b:
                return kn.measure_retained(idx, rng) if idx in kn.retained else None
            return kn.fake_bits.get(idx)
        if idx in kn.retained:
            return kn.measure_retained(idx, rng)
        return None

    def guess_b(self, context, rng: np.random.Generator) -> dict:
        """Guess the targeted parties' prepared SIFT bits.

        Returns ``{"k_b": {origin: bit}, "k_c": {origin: bit}}``; ``context``
        carries both published orders and the resolved final positions.
        """
        spec = self.spec
        out = {"k_b": {}, "k_c": {}}
        if spec.kind in ("none", "em"):
            return out
        kn = self.knowledge
        if spec.attack_id == "b.mr.bob":
            for pos, (tag, origin) in context.resolved.items():
                if tag == "SIFT_C" and pos in kn.recorded:
                    out["k_c"][origin] = kn.recorded[pos]
        elif spec.attack_id == "b.mr.charlie":
            for q, (what, j) in enumerate(context.bob_pub):
                if what == "sift" and q in kn.recorded:
                    out["k_b"][j] = kn.recorded[q]
        elif spec.attack_id == "b.ir.bob":
            for pos, (tag, origin) in context.resolved.items():
                if tag == "SIFT_C" and pos in kn.retained:
                    out["k_c"][origin] = kn.measure_retained(pos, rng)
        elif spec.attack_id == "b.ir.charlie":
            for q, (what, j) in enumerate(context.bob_pub):
                if what == "sift" and q in kn.retained:
                    out["k_b"][j] = kn.measure_retained(q, rng)
        elif spec.actor == "eve":
            self._guess_b_eve(context, rng, out)
        return out

    def _guess_b_eve(self, context, rng, out):
        kn = self.knowledge
        leg = self._eve_leg()
        if leg is Leg.ALICE_TO_BOB:
            return  # only CTRL particles travel there; no key information
        if leg is Leg.BOB_TO_CHARLIE:
            for q, (what, j) in enumerate(context.bob_pub):
                if what != "sift":
                    continue
                if self.spec.kind == "mr" and q in kn.recorded:
                    out["k_b"][j] = kn.recorded[q]
                elif self.spec.kind == "ir" and q in kn.retained:
                    out["k_b"][j] = kn.measure_retained(q, rng)
            return
        for pos, (tag, origin) in context.resolved.items():
            key = {"SIFT_B": "k_b", "SIFT_C": "k_c"}.get(tag)
            if key is None:
                continue
            if self.spec.kind == "mr" and pos in kn.recorded:
                out[key][origin] = kn.recorded[pos]
            elif self.spec.kind == "ir" and pos in kn.retained:
                out[key][origin] = kn.measure_retained(pos, rng)


def build_attack_plan(spec: Optional[AttackSpec], protocol: str) -> AttackPlan:
    if spec is None:
        spec = AttackSpec(protocol, "none")
    if spec.protocol != protocol:
        raise UnsupportedAttackError(
            f"attack {spec.attack_id} targets protocol {spec.protocol}, not {protocol}")
    return AttackPlan(spec)

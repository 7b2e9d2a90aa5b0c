"""Reputation-gated BFT consensus over a deterministic simulated network.

Selection: the n highest-reputation nodes form the committee; their rank
order fixes the leader rotation. A view walks request, pre-prepare,
prepare, accept, reply in synchronous slots with a one-slot delivery
delay. Thresholds follow the source protocol literally: a node finishes
the prepare stage on 2l matching votes from other nodes (the leader's
pre-prepare counts as its vote), commits on n-l distinct agreeing accept
senders including itself, and the client accepts the result when fewer
than (n-l)/3 received replies disagree.

Handlers are pure: each takes (state, message) and returns a fresh state
plus an outbox. Byzantine and crash behaviors are generated outside the
honest handlers, so a corrupted node can lie or stay silent but cannot
forge another node's message tag.

The detection and collusion experiments at the bottom drive the
reputation schemes with scripted per-slot cooperation probabilities and
measure how selection quality differs between the subjective-logic
scheme and the linear-smoothing baseline.
"""

from __future__ import annotations

import hashlib
import hmac
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .reputation import (
    InteractionRecord,
    LinearReputationTracker,
    ReputationEngine,
    WeightConfig,
)

__all__ = [
    "Behavior",
    "ReplicaStrategy",
    "ConsensusConfig",
    "BlockProposal",
    "NetMessage",
    "NodeState",
    "Network",
    "ViewOutcome",
    "select_consensus_nodes",
    "run_view",
    "model_check_safety",
    "BehaviorProfile",
    "inject_behavior",
    "sample_cooperation",
    "detection_experiment",
    "collusion_experiment",
    "correct_block_probability",
]


class Behavior(Enum):
    HONEST = "honest"
    BYZANTINE = "byzantine"
    CRASH = "crash"


class ReplicaStrategy(Enum):
    """What a byzantine node does at each broadcast point."""

    SILENT = "silent"
    WRONG_DIGEST = "wrong-digest"
    SPLIT = "split"
    ACT_HONEST = "act-honest"


@dataclass(frozen=True)
class ConsensusConfig:
    n: int = 10
    l: int = 3
    max_slots: int = 8

    def __post_init__(self) -> None:
        if self.l < 0:
            raise ValueError("fault budget l must be nonnegative")
        if self.n < 3 * self.l + 1:
            raise ValueError("committee must satisfy n >= 3l + 1")
        if self.max_slots < 6:
            raise ValueError("a view needs at least 6 slots to complete")

    @property
    def prepare_quorum(self) -> int:
        return 2 * self.l

    @property
    def accept_quorum(self) -> int:
        return self.n - self.l

    @property
    def message_budget(self) -> int:
        return 5 * self.n * self.n


@dataclass(frozen=True)
class BlockProposal:
    height: int
    tx_digests: tuple[str, ...]
    proposer: str

    def digest(self) -> str:
        body = f"{self.height}|{self.proposer}|" + "|".join(self.tx_digests)
        return hashlib.sha256(body.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class NetMessage:
    send_slot: int
    deliver_slot: int
    sender: str
    recipient: str
    kind: str          # request / pre-prepare / prepare / accept / reply
    digest: str
    tag: str
    flags: str = ""

    def trace_line(self) -> str:
        return (
            f"{self.send_slot},{self.sender},{self.recipient},"
            f"{self.kind},{self.digest},{self.flags}"
        )


def _node_key(node_id: str) -> bytes:
    # deterministic per-node secret; a stand-in for real key material
    return hashlib.sha256(b"node-key:" + node_id.encode()).digest()


def message_tag(sender: str, kind: str, digest: str, recipient: str) -> str:
    payload = f"{kind}|{digest}|{recipient}".encode()
    return hmac.new(_node_key(sender), payload, hashlib.sha256).hexdigest()[:16]


def verify_tag(msg: NetMessage) -> bool:
    expected = message_tag(msg.sender, msg.kind, msg.digest, msg.recipient)
    return hmac.compare_digest(expected, msg.tag)


@dataclass(frozen=True)
class NodeState:
    node_id: str
    is_leader: bool
    leader_id: str = ""
    accepted_digest: str | None = None      # digest from the pre-prepare this node trusts
    prepare_votes: tuple[tuple[str, tuple[str, ...]], ...] = ()
    accept_votes: tuple[tuple[str, tuple[str, ...]], ...] = ()
    sent_prepare: bool = False
    sent_accept: bool = False
    committed: str | None = None

    def votes(self, which: str) -> dict[str, set[str]]:
        raw = self.prepare_votes if which == "prepare" else self.accept_votes
        return {d: set(s) for d, s in raw}

    def with_votes(self, which: str, votes: dict[str, set[str]]) -> "NodeState":
        packed = tuple(sorted((d, tuple(sorted(s))) for d, s in votes.items()))
        if which == "prepare":
            return replace(self, prepare_votes=packed)
        return replace(self, accept_votes=packed)


class Network:
    """Synchronous message fabric with one-slot delivery and a full trace."""

    def __init__(self, delay: int = 1):
        self.delay = delay
        self._queue: dict[int, list[NetMessage]] = defaultdict(list)
        self.trace: list[str] = []
        self.message_count = 0

    def send(self, slot: int, sender: str, recipient: str, kind: str,
             digest: str, flags: str = "") -> None:
        msg = NetMessage(
            send_slot=slot,
            deliver_slot=slot + self.delay,
            sender=sender,
            recipient=recipient,
            kind=kind,
            digest=digest,
            tag=message_tag(sender, kind, digest, recipient),
            flags=flags,
        )
        self._queue[msg.deliver_slot].append(msg)
        self.trace.append(msg.trace_line())
        self.message_count += 1

    def deliver(self, slot: int) -> list[NetMessage]:
        batch = self._queue.pop(slot, [])
        return sorted(batch, key=lambda m: (m.sender, m.recipient, m.kind, m.digest))


@dataclass(frozen=True)
class ViewOutcome:
    committed_digest: str | None
    unanimous: bool
    client_accepted: bool
    abnormal_replies: int
    abort_reason: str | None
    next_leader: str
    message_count: int
    trace: tuple[str, ...]
    per_node: dict


def select_consensus_nodes(reputations: dict, n: int) -> list:
    """Top n ids by average final reputation, ties broken by lowest id."""
    if len(reputations) < n:
        raise ValueError(
            f"population {len(reputations)} smaller than committee size {n}"
        )
    ranked = sorted(reputations.items(), key=lambda kv: (-kv[1], kv[0]))
    return [node_id for node_id, _ in ranked[:n]]


def _wrong_digest(digest: str) -> str:
    return hashlib.sha256(b"equivocation:" + digest.encode()).hexdigest()[:16]


def _handle_honest(state: NodeState, msg: NetMessage, quorums: ConsensusConfig,
                   peers: list[str]) -> tuple[NodeState, list[tuple[str, str, str]]]:
    """Pure honest-node transition: returns new state and (recipient, kind,
    digest) outbox entries. Messages with bad tags are dropped."""
    if not verify_tag(msg):
        return state, []
    out: list[tuple[str, str, str]] = []

    if msg.kind == "request" and state.is_leader and state.accepted_digest is None:
        digest = msg.digest
        votes = state.votes("prepare")
        votes.setdefault(digest, set()).add(state.node_id)
        state = replace(state, accepted_digest=digest, sent_prepare=True)
        state = state.with_votes("prepare", votes)
        for peer in peers:
            if peer != state.node_id:
                out.append((peer, "pre-prepare", digest))
        return state, out

    if (
        msg.kind == "pre-prepare"
        and state.accepted_digest is None
        and msg.sender == state.leader_id
    ):
        digest = msg.digest
        votes = state.votes("prepare")
        votes.setdefault(digest, set()).add(msg.sender)   # the leader's vote
        state = replace(state, accepted_digest=digest)
        state = state.with_votes("prepare", votes)
        if not state.sent_prepare:
            state = replace(state, sent_prepare=True)
            for peer in peers:
                if peer != state.node_id:
                    out.append((peer, "prepare", digest))
        return state, out

    if msg.kind == "prepare":
        votes = state.votes("prepare")
        votes.setdefault(msg.digest, set()).add(msg.sender)
        state = state.with_votes("prepare", votes)
    elif msg.kind == "accept":
        votes = state.votes("accept")
        votes.setdefault(msg.digest, set()).add(msg.sender)
        state = state.with_votes("accept", votes)

    # stage completion checks run on every delivery
    if (
        not state.sent_accept
        and state.accepted_digest is not None
    ):
        supporters = state.votes("prepare").get(state.accepted_digest, set())
        supporters.discard(state.node_id)
        if len(supporters) >= quorums.prepare_quorum:
            accepts = state.votes("accept")
            accepts.setdefault(state.accepted_digest, set()).add(state.node_id)
            state = replace(state, sent_accept=True)
            state = state.with_votes("accept", accepts)
            for peer in peers:
                if peer != state.node_id:
                    out.append((peer, "accept", state.accepted_digest))

    if state.committed is None and state.accepted_digest is not None:
        agree = state.votes("accept").get(state.accepted_digest, set())
        if state.sent_accept:
            agree.add(state.node_id)
        if len(agree) >= quorums.accept_quorum:
            state = replace(state, committed=state.accepted_digest)
            out.append(("client", "reply", state.accepted_digest))

    return state, out


def _byzantine_outbox(node_id: str, strategy: ReplicaStrategy, kind: str,
                      digest: str, peers: list[str]) -> list[tuple[str, str, str]]:
    """Adversarial broadcast for one stage. SPLIT sends the honest digest to
    the first half of the committee and a fabricated one to the rest."""
    if strategy is ReplicaStrategy.SILENT:
        return []
    bad = _wrong_digest(digest)
    out = []
    others = [p for p in peers if p != node_id]
    for i, peer in enumerate(others):
        if strategy is ReplicaStrategy.ACT_HONEST:
            out.append((peer, kind, digest))
        elif strategy is ReplicaStrategy.WRONG_DIGEST:
            out.append((peer, kind, bad))
        else:  # SPLIT
            out.append((peer, kind, digest if i < len(others) // 2 else bad))
    return out


def run_view(
    nodes,
    proposal: BlockProposal,
    config: ConsensusConfig,
    net: Network | None = None,
    seed: int = 0,
    view: int = 0,
    strategies: dict | None = None,
) -> ViewOutcome:
    """Execute one consensus view over the ordered committee.

    nodes: ordered (id, Behavior) pairs fixing the rotation; the leader is
    nodes[view % n]. strategies maps byzantine ids to a ReplicaStrategy
    (default SPLIT). The seed only disambiguates nothing here today, but is
    part of the signature so traces stay reproducible when adversaries gain
    randomized options.
    """
    del seed  # all current adversary strategies are deterministic
    roster = list(nodes)
    if len(roster) != config.n:
        raise ValueError(f"expected {config.n} committee members, got {len(roster)}")
    order = [node_id for node_id, _ in roster]
    behaviors = dict(roster)
    leader = order[view % config.n]
    strategies = strategies or {}

    if net is None:
        net = Network()
    states = {
        node_id: NodeState(node_id=node_id, is_leader=(node_id == leader),
                           leader_id=leader)
        for node_id in order
    }
    digest = proposal.digest()
    byz_acted: dict[str, set[str]] = defaultdict(set)

    net.send(0, "client", leader, "request", digest)

    pre_prepare_seen = False
    for slot in range(1, config.max_slots):
        batch = net.deliver(slot)
        if not batch:
            continue
        stage_sent: list[tuple[str, str, str, str]] = []
        for msg in batch:
            recipient = msg.recipient
            if recipient == "client":
                continue
            behavior = behaviors.get(recipient)
            if behavior is Behavior.CRASH:
                continue
            if msg.kind == "pre-prepare":
                pre_prepare_seen = True
            if behavior is Behavior.BYZANTINE:
                strat = strategies.get(recipient, ReplicaStrategy.SPLIT)
                # a byzantine node reacts once per stage it observes
                if msg.kind == "request" and recipient == leader:
                    if "lead" not in byz_acted[recipient]:
                        byz_acted[recipient].add("lead")
                        for peer, kind, dig in _byzantine_outbox(
                            recipient, strat, "pre-prepare", msg.digest, order
                        ):
                            stage_sent.append((recipient, peer, kind, dig))
                elif msg.kind == "pre-prepare":
                    if "prepare" not in byz_acted[recipient]:
                        byz_acted[recipient].add("prepare")
                        for peer, kind, dig in _byzantine_outbox(
                            recipient, strat, "prepare", msg.digest, order
                        ):
                            stage_sent.append((recipient, peer, kind, dig))
                elif msg.kind == "prepare":
                    if "accept" not in byz_acted[recipient]:
                        byz_acted[recipient].add("accept")
                        for peer, kind, dig in _byzantine_outbox(
                            recipient, strat, "accept", msg.digest, order
                        ):
                            stage_sent.append((recipient, peer, kind, dig))
                elif msg.kind == "accept":
                    if "reply" not in byz_acted[recipient]:
                        byz_acted[recipient].add("reply")
                        for _, kind, dig in _byzantine_outbox(
                            recipient, strat, "reply", msg.digest, ["client", recipient]
                        ):
                            stage_sent.append((recipient, "client", kind, dig))
                continue
            new_state, out = _handle_honest(states[recipient], msg, config, order)
            states[recipient] = new_state
            for peer, kind, dig in out:
                stage_sent.append((recipient, peer, kind, dig))
        for sender, peer, kind, dig in stage_sent:
            net.send(slot, sender, peer, kind, dig)
        if net.message_count > config.message_budget:
            break

    per_node = {
        node_id: states[node_id].committed
        for node_id in order
        if behaviors[node_id] is Behavior.HONEST
    }
    committed_digests = {d for d in per_node.values() if d is not None}
    unanimous = len(committed_digests) <= 1
    committed_digest = committed_digests.pop() if len(committed_digests) == 1 else None

    # Step-6 style client check over received replies
    replies = [
        line.split(",") for line in net.trace
        if line.split(",")[3] == "reply" and line.split(",")[2] == "client"
    ]
    reply_digests = [parts[4] for parts in replies]
    abnormal = 0
    client_accepted = False
    if reply_digests:
        top = max(set(reply_digests), key=lambda d: (reply_digests.count(d), d))
        abnormal = sum(1 for d in reply_digests if d != top)
        client_accepted = (
            committed_digest is not None
            and top == committed_digest
            and abnormal < (config.n - config.l) / 3
        )

    if committed_digest is not None:
        abort_reason = None
    elif not pre_prepare_seen:
        abort_reason = "leader-timeout"
    else:
        abort_reason = "no-quorum"
    next_leader = order[(view + 1) % config.n]

    return ViewOutcome(
        committed_digest=committed_digest,
        unanimous=unanimous,
        client_accepted=client_accepted,
        abnormal_replies=abnormal,
        abort_reason=abort_reason,
        next_leader=next_leader,
        message_count=net.message_count,
        trace=tuple(net.trace),
        per_node=per_node,
    )


def model_check_safety(config: ConsensusConfig | None = None) -> dict:
    """Bounded adversary enumeration at one committee size.

    Every combination of replica strategies for the l corrupted nodes is
    run, under an honest leader, a byzantine leader (equivocating, silent,
    or junk-broadcasting), and a crashed leader. Checks: honest nodes never
    commit divergent digests; the failure-free run commits in one view;
    message counts stay within the 5 n^2 budget.
    """
    config = config or ConsensusConfig()
    order = [f"n{i:02d}" for i in range(config.n)]
    proposal = BlockProposal(height=1, tx_digests=("tx0", "tx1"), proposer=order[0])
    strategies = list(ReplicaStrategy)

    def combos(k):
        if k == 0:
            yield ()
            return
        for head in strategies:
            for tail in combos(k - 1):
                yield (head, *tail)

    runs = 0
    divergent = 0
    committed_runs = 0
    max_messages = 0
    failure_free_committed = False

    # failure-free baseline
    roster = [(node_id, Behavior.HONEST) for node_id in order]
    out = run_view(roster, proposal, config)
    runs += 1
    max_messages = max(max_messages, out.message_count)
    failure_free_committed = out.committed_digest is not None and out.client_accepted
    if not out.unanimous:
        divergent += 1

    cases = []
    # honest leader, l byzantine replicas
    for combo in combos(config.l):
        byz = order[-config.l:] if config.l else []
        cases.append((byz, dict(zip(byz, combo)), None))
    # byzantine leader (counts toward l) plus l-1 byzantine replicas
    if config.l >= 1:
        for leader_strat in (ReplicaStrategy.SPLIT, ReplicaStrategy.SILENT,
                             ReplicaStrategy.WRONG_DIGEST):
            for combo in combos(config.l - 1):
                byz = [order[0]] + (order[-(config.l - 1):] if config.l > 1 else [])
                strat_map = {order[0]: leader_strat}
                strat_map.update(dict(zip(byz[1:], combo)))
                cases.append((byz, strat_map, None))
        # crashed leader
        for combo in combos(config.l - 1):
            byz = order[-(config.l - 1):] if config.l > 1 else []
            cases.append((byz, dict(zip(byz, combo)), order[0]))

    for byz, strat_map, crashed in cases:
        roster = []
        for node_id in order:
            if node_id == crashed:
                roster.append((node_id, Behavior.CRASH))
            elif node_id in byz:
                roster.append((node_id, Behavior.BYZANTINE))
            else:
                roster.append((node_id, Behavior.HONEST))
        out = run_view(roster, proposal, config, strategies=strat_map)
        runs += 1
        max_messages = max(max_messages, out.message_count)
        if not out.unanimous:
            divergent += 1
        if out.committed_digest is not None:
            committed_runs += 1

    return {
        "runs": runs,
        "divergent": divergent,
        "committed_runs": committed_runs,
        "failure_free_committed": failure_free_committed,
        "max_messages": max_messages,
        "message_budget": config.message_budget,
    }


# ---------------------------------------------------------------------------
# scripted behavior and reputation experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BehaviorProfile:
    """Per-slot cooperation probability, constant after the listed slots."""

    by_slot: tuple[tuple[int, float], ...]   # (first slot, probability) steps
    default: float = 1.0

    def __post_init__(self) -> None:
        for _, p in self.by_slot:
            if not 0.0 <= p <= 1.0:
                raise ValueError("cooperation probabilities must lie in [0, 1]")
        if not 0.0 <= self.default <= 1.0:
            raise ValueError("cooperation probabilities must lie in [0, 1]")

    def probability(self, slot: int) -> float:
        prob = self.default
        for first, p in sorted(self.by_slot):
            if slot >= first:
                prob = p
        return prob


def switch_profile(before: float, after: float, onset: int) -> BehaviorProfile:
    return BehaviorProfile(by_slot=((0, before), (onset, after)), default=before)


_PROFILES: dict[str, BehaviorProfile] = {}


def inject_behavior(node_id: str, profile: BehaviorProfile) -> None:
    """Attach a scripted cooperation profile to a node id for experiments."""
    _PROFILES[str(node_id)] = profile


def sample_cooperation(node_id: str, slot: int, rng: np.random.Generator) -> bool:
    profile = _PROFILES.get(str(node_id))
    p = 1.0 if profile is None else profile.probability(slot)
    return bool(rng.random() < p)


def _interaction_counts(rng: np.random.Generator, p: float, trials: int) -> tuple[int, int]:
    positives = int(rng.binomial(trials, p))
    return positives, trials - positives


def detection_experiment(
    population: int,
    misbehaving_count: int,
    threshold: float,
    scheme: str,
    slots: int,
    seed: int,
    raters: int = 10,
    onset: int = 5,
    p_before: float = 0.8,
    p_after: float = 0.1,
    weight_config: WeightConfig | None = None,
) -> list[float]:
    """Per-slot fraction of misbehaving nodes scored below the threshold.

    A fixed committee of honest raters scores every misbehaving node from
    observed per-slot consensus interactions (5 to 10 per pair per slot).
    scheme selects the reputation aggregate: \"SL\" for the opinion-fusion
    engine, \"LR\" for the linear-smoothing baseline.
    """
    if misbehaving_count > population:
        raise ValueError("misbehaving count cannot exceed the population")
    if scheme not in ("SL", "LR"):
        raise ValueError("scheme must be 'SL' or 'LR'")
    rng = np.random.default_rng(seed)
    rater_ids = [f"r{i:03d}" for i in range(min(raters, population - misbehaving_count))]
    target_ids = [f"m{i:03d}" for i in range(misbehaving_count)]

    engine = ReputationEngine(weight_config) if scheme == "SL" else None
    tracker = LinearReputationTracker() if scheme == "LR" else None
    if engine is not None:
        for i, rid in enumerate(rater_ids):
            engine.register(rid, arrival_hour=9 + (i % 3))
        for i, tid in enumerate(target_ids):
            engine.register(tid, arrival_hour=9 + (i % 3))

    series: list[float] = []
    for slot in range(1, slots + 1):
        p = p_before if slot < onset else p_after
        for target in target_ids:
            for rater in rater_ids:
                trials = int(rng.integers(5, 11))
                pos, neg = _interaction_counts(rng, p, trials)
                if engine is not None:
                    engine.record_outcomes(slot, rater, target, pos, neg)
                else:
                    tracker.update(rater, target, pos, neg)
        below = 0
        for target in target_ids:
            if engine is not None:
                score = engine.average_reputation(target, at=slot + 1, raters=rater_ids)
            else:
                score = tracker.average_reputation(target, rater_ids)
            if score < threshold:
                below += 1
        series.append(below / misbehaving_count)
    return series


def full_detection_slot(series: list[float]) -> int | None:
    """First 1-indexed slot where the whole misbehaving set is flagged."""
    for i, rate in enumerate(series):
        if rate >= 1.0:
            return i + 1
    return None


@lru_cache(maxsize=512)
def _collusion_reputations(
    seed: int,
    n_raters: int,
    candidates: int,
    n_colluders: int,
    slots: int,
    onset: int,
    p_honest: float,
    p_backstab_before: float,
    p_backstab_after: float,
) -> tuple[tuple, tuple, tuple, tuple]:
    """Both schemes' average reputations for every committee candidate,
    computed from one shared interaction stream (common random numbers).

    Cached: a threshold sweep re-reads the same seeds, and the scores do
    not depend on the threshold. Returns sorted (id, score) tuples."""
    rng = np.random.default_rng(seed)
    rater_ids = [f"r{i:03d}" for i in range(n_raters)]
    cand_ids = rater_ids[:candidates]
    colluders = cand_ids[:n_colluders]
    colluder_set = set(colluders)

    engine = ReputationEngine()
    tracker = LinearReputationTracker()
    for i, rid in enumerate(rater_ids):
        engine.register(rid, arrival_hour=8 + (i % 5))

    for slot in range(1, slots + 1):
        for target in cand_ids:
            if target in colluder_set:
                p = p_backstab_before if slot < onset else p_backstab_after
            else:
                p = p_honest
            for rater in rater_ids:
                if rater == target:
                    continue
                if rater in colluder_set and target in colluder_set:
                    # fabricated mutual praise: all-positive evidence
                    trials = int(rng.integers(5, 11))
                    engine.record_outcomes(slot, rater, target, trials, 0)
                    tracker.update(rater, target, trials, 0)
                    continue
                trials = int(rng.integers(5, 11))
                pos, neg = _interaction_counts(rng, p, trials)
                engine.record_outcomes(slot, rater, target, pos, neg)
                tracker.update(rater, target, pos, neg)

    sl_scores: dict[str, float] = {}
    lr_scores: dict[str, float] = {}
    for target in cand_ids:
        other = [r for r in rater_ids if r != target]
        sl_scores[target] = engine.average_reputation(target, at=slots + 1, raters=other)
        lr_scores[target] = tracker.average_reputation(target, other)
    return (
        tuple(sorted(sl_scores.items())),
        tuple(sorted(lr_scores.items())),
        tuple(cand_ids),
        tuple(colluders),
    )


def correct_block_probability(
    scores: dict[str, float],
    colluders: list[str],
    threshold: float,
) -> float:
    """1.0 when reputation gating leaves colluders strictly below a third
    of the eligible committee, else 0.0; an empty committee counts as a
    failure because no block can be verified."""
    eligible = [node for node, score in scores.items() if score >= threshold]
    if not eligible:
        return 0.0
    bad = sum(1 for node in eligible if node in colluders)
    return 1.0 if bad < len(eligible) / 3 else 0.0


def collusion_experiment(
    threshold: float,
    scheme: str,
    seeds: int = 100,
    colluder_fraction: float = 4 / 9,
    candidates: int = 9,
    n_raters: int = 50,
    slots: int = 8,
    onset: int = 5,
    seed_base: int = 0,
) -> float:
    """Monte-Carlo probability that reputation gating yields a correct
    block when colluders fabricate mutual praise and then misbehave.

    colluder_fraction is the corrupted share of the committee candidates;
    the attack scenario keeps it at or above one third. Both schemes are
    evaluated on identical interaction streams seed by seed, so a sweep
    over thresholds compares selection quality, not sampling noise.
    """
    if scheme not in ("SL", "LR"):
        raise ValueError("scheme must be 'SL' or 'LR'")
    if not 0.0 <= colluder_fraction <= 1.0:
        raise ValueError("colluder fraction must lie in [0, 1]")
    n_colluders = round(colluder_fraction * candidates)
    if n_colluders == 0:
        return 1.0
    if n_colluders >= candidates:
        return 0.0
    hits = 0.0
    for s in range(seeds):
        sl_pairs, lr_pairs, _, colluders = _collusion_reputations(
            seed_base + s, n_raters, candidates, n_colluders, slots, onset,
            0.95, 0.8, 0.1,
        )
        scores = dict(sl_pairs if scheme == "SL" else lr_pairs)
        hits += correct_block_probability(scores, list(colluders), threshold)
    return hits / seeds

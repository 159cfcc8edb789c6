"""Minimal propose/vote/certify round standing in for the underlying protocol.

One round per view: the view's leader broadcasts a proposal on entry, every
processor currently in that view votes once, and the leader aggregates n-t
distinct votes into a quorum certificate and broadcasts it. Three message hops
end to end, so a view completes within 3 * delta once a quorum of correct
processors occupies it under a correct leader. Payloads carry no content;
only certificate production matters here.

Proposals arriving ahead of the recipient's view are buffered and replayed on
entry; proposals for views already left are dropped. Votes are never buffered:
a correct processor votes only while the proposal's view is current.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .certificates import form_qc
from .core import ALL, Action, ProcessorState, ProtocolParams, Send, leader_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Proposal:
    view: int
    leader: int


@dataclass(frozen=True)
class Vote:
    view: int
    signer: int


@dataclass(frozen=True)
class FormQC:
    view: int


@dataclass
class UnderlyingState:
    """Per-processor round bookkeeping, separate from the synchroniser state."""

    proposed: set[int] = field(default_factory=set)
    voted: set[int] = field(default_factory=set)
    buffered: dict[int, Proposal] = field(default_factory=dict)
    votes: dict[int, list[int]] = field(default_factory=dict)
    formed_qcs: set[int] = field(default_factory=set)


def on_enter_view(
    state: ProcessorState, sub: UnderlyingState, view: int, params: ProtocolParams
) -> list[Action]:
    """Entry into a view by any path (clock, certificate, or protocol start)."""
    actions: list[Action] = []
    if state.id == leader_of(view, params) and view not in sub.proposed:
        sub.proposed.add(view)
        actions.append(Send(ALL, Proposal(view, state.id)))
    held = sub.buffered.pop(view, None)
    if held is not None:
        actions.extend(on_proposal(state, sub, held, params))
    return actions


def on_proposal(
    state: ProcessorState, sub: UnderlyingState, prop: Proposal, params: ProtocolParams
) -> list[Action]:
    """Vote if the proposal's view is current; buffer if early; drop if late."""
    if prop.leader != leader_of(prop.view, params):
        logger.debug("processor %d: proposal for view %d from non-leader %d",
                     state.id, prop.view, prop.leader)
        return []
    if state.view > prop.view:
        return []
    if state.view < prop.view:
        sub.buffered[prop.view] = prop
        return []
    if prop.view in sub.voted:
        return []
    sub.voted.add(prop.view)
    return [Send(prop.leader, Vote(prop.view, state.id))]


def on_vote(
    state: ProcessorState, sub: UnderlyingState, vote: Vote, params: ProtocolParams
) -> list[Action]:
    """Leader-side vote aggregation; fires at exactly n-t distinct signers.

    Votes count toward their view even after the leader has moved on, so a
    round still completes when the leader races ahead of its own quorum.
    """
    if state.id != leader_of(vote.view, params):
        return []
    got = sub.votes.setdefault(vote.view, [])
    if vote.signer in got:
        return []
    got.append(vote.signer)
    if len(got) == params.n - params.t and vote.view not in sub.formed_qcs:
        sub.formed_qcs.add(vote.view)
        qc = form_qc(vote.view, [(vote.view, s) for s in got], params.n, params.t)
        return [FormQC(vote.view), Send(ALL, qc)]
    return []

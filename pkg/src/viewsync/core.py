"""Clock-driven view synchronisation: per-processor state machine.

Views are grouped k per leader. Every view v has a start time on the local
clock, gamma * v, and views divisible by k are *boundary* views: a processor
whose clock lands exactly on a boundary view's start time enters it and sends
a signed view message to that view's leader. The leader aggregates t+1 such
messages into a view certificate and broadcasts it. Quorum certificates from
the underlying protocol advance processors view by view in between, and both
certificate kinds drag lagging clocks forward, never backward.

Handlers are deterministic functions of (state, input, params). They mutate
the state in place and return the actions the host must perform; they never
read a wall clock, draw randomness, or touch a network. The host owns time:
it sets state.clock to the current local reading before invoking a handler.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .certificates import (
    QuorumCertificate,
    ViewCertificate,
    ViewMessage,
    form_vc,
)
from .timeutil import Time

ALL = "*"  # broadcast recipient marker


class RoundRobinSchedule:
    """Leader groups assigned 0, 1, ..., n-1, 0, 1, ... in id order."""

    def __init__(self, n: int):
        self.n = n

    def leader_for_group(self, group: int) -> int:
        return group % self.n


class PermutationSchedule:
    """Leader groups assigned by successive seeded uniform permutations of the ids."""

    def __init__(self, n: int, seed: int):
        self.n = n
        self.seed = seed
        self._rng = random.Random(seed)
        self._order: list[int] = []

    def leader_for_group(self, group: int) -> int:
        while group >= len(self._order):
            block = list(range(self.n))
            self._rng.shuffle(block)
            self._order.extend(block)
        return self._order[group]


@dataclass(frozen=True)
class ProtocolParams:
    """Static parameters shared by every processor in one run.

    gamma is the view duration in clock units and must equal x * delta_cap for
    the underlying protocol's hop count x >= 2. k >= 3 is the number of
    consecutive views per leader; views divisible by k are boundary views.
    """

    n: int
    t: int
    k: int
    gamma: Time
    schedule: RoundRobinSchedule | PermutationSchedule

    def __post_init__(self) -> None:
        if self.n < 1 or not 0 <= self.t or not 3 * self.t < self.n:
            raise ValueError(f"need 0 <= t < n/3, got n={self.n} t={self.t}")
        if self.k < 3:
            raise ValueError(f"need k >= 3, got {self.k}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def clock_time(view: int, params: ProtocolParams) -> Time:
    """Local-clock start time of a view."""
    if view < 0:
        raise ValueError(f"negative view {view}")
    return params.gamma * view


def is_boundary(view: int, params: ProtocolParams) -> bool:
    """True for views that begin a leader group (entered on clock alone)."""
    return view % params.k == 0


def view_at(clock_value: Time, params: ProtocolParams) -> int:
    """The view whose start time equals clock_value; error if none does."""
    q, r = divmod(clock_value, params.gamma)
    if r != 0 or q < 0:
        raise ValueError(f"clock value {clock_value} is not a view start time")
    return int(q)


def leader_of(view: int, params: ProtocolParams) -> int:
    """Leader id for a view: groups of k consecutive views share one leader."""
    if view < 0:
        raise ValueError(f"negative view {view}")
    return params.schedule.leader_for_group(view // params.k)


# ---------------------------------------------------------------------------
# Actions returned by handlers for the host to perform.


@dataclass(frozen=True)
class Send:
    to: int | str  # processor id or ALL
    payload: object


@dataclass(frozen=True)
class ForwardClock:
    to: Time


@dataclass(frozen=True)
class EnterView:
    view: int


@dataclass(frozen=True)
class FormVC:
    view: int


Action = Send | ForwardClock | EnterView | FormVC


@dataclass
class ProcessorState:
    """Mutable per-processor synchroniser state.

    clock carries the current local reading (host-maintained between events,
    jumped by ForwardClock within them) and never runs backward. view is
    likewise monotone. Dedup sets make certificate replays no-ops and bound
    the messages a correct processor signs: at most one view message per
    boundary view, at most one certificate formed per view led.
    """

    id: int
    clock: Time = 0
    view: int = 0
    highest_qc_view: int | None = None
    sent_view_msgs: set[int] = field(default_factory=set)
    collected_view_msgs: dict[int, list[int]] = field(default_factory=dict)
    formed_vcs: set[int] = field(default_factory=set)
    seen_qcs: set[int] = field(default_factory=set)
    seen_vcs: set[int] = field(default_factory=set)


def on_clock_reaches(state: ProcessorState, c: Time, params: ProtocolParams) -> list[Action]:
    """The local clock sits exactly on boundary view start time c.

    Fires both on natural clock progression and when a certificate forwards
    the clock onto the boundary exactly. Start times jumped over by a forward
    never fire, and a stale boundary (view below current) is a no-op, as is a
    boundary whose view message already went out: the view message for a
    boundary view is sent at most once.
    """
    v = view_at(c, params)
    if not is_boundary(v, params):
        raise ValueError(f"view {v} is not a boundary view")
    if state.clock != c:
        raise ValueError(f"clock {state.clock} not on boundary {c}")
    if v < state.view or v in state.sent_view_msgs:
        return []
    actions: list[Action] = []
    if v > state.view:
        state.view = v
        actions.append(EnterView(v))
    state.sent_view_msgs.add(v)
    actions.append(Send(leader_of(v, params), ViewMessage(v, state.id)))
    return actions


def on_qc(state: ProcessorState, qc: QuorumCertificate, params: ProtocolParams) -> list[Action]:
    """First sight of a quorum certificate; replays are no-ops.

    Any first-seen certificate may drag the clock forward to the start of the
    following view. Only certificates for the current view or above advance
    the view; a forward that lands the clock exactly on a boundary start also
    fires the boundary handler, so the view message still goes out.
    """
    if qc.view in state.seen_qcs:
        return []
    state.seen_qcs.add(qc.view)
    if state.highest_qc_view is None or qc.view > state.highest_qc_view:
        state.highest_qc_view = qc.view
    target = qc.view + 1
    start = clock_time(target, params)
    actions: list[Action] = []
    landed = False
    if state.clock < start:
        state.clock = start
        landed = True
        actions.append(ForwardClock(start))
    if qc.view >= state.view:
        if target > state.view:
            state.view = target
            actions.append(EnterView(target))
        if landed and is_boundary(target, params):
            actions.extend(on_clock_reaches(state, start, params))
    return actions


def on_vc(state: ProcessorState, vc: ViewCertificate, params: ProtocolParams) -> list[Action]:
    """First sight of a view certificate for a boundary view above the current one.

    Enters the certificate's view directly and forwards the clock to its start
    if behind. When the forward lands exactly on the start (always, if it
    happens at all) and no view message for that view went out yet, the
    boundary handler fires so the message is still sent. Certificates at or
    below the current view, and replays, are no-ops.
    """
    if not is_boundary(vc.view, params):
        raise ValueError(f"view certificate for non-boundary view {vc.view}")
    if vc.view in state.seen_vcs:
        return []
    state.seen_vcs.add(vc.view)
    if vc.view <= state.view:
        return []
    start = clock_time(vc.view, params)
    state.view = vc.view
    actions: list[Action] = [EnterView(vc.view)]
    if state.clock < start:
        state.clock = start
        actions.append(ForwardClock(start))
        actions.extend(on_clock_reaches(state, start, params))
    return actions


def on_view_message(state: ProcessorState, msg: ViewMessage, params: ProtocolParams) -> list[Action]:
    """Leader-side collection of view messages.

    Accepts messages for any view this processor leads at or above its current
    view (future views included; early arrivals wait here). The certificate is
    formed the moment the count of distinct signers reaches exactly t+1 and
    carries exactly those first t+1 signers; later arrivals change nothing.
    """
    if state.id != leader_of(msg.view, params):
        return []
    if msg.view < state.view:
        return []
    got = state.collected_view_msgs.setdefault(msg.view, [])
    if msg.signer in got:
        return []
    got.append(msg.signer)
    if len(got) == params.t + 1 and msg.view not in state.formed_vcs:
        state.formed_vcs.add(msg.view)
        vc = form_vc(msg.view, [ViewMessage(msg.view, s) for s in got], params.t)
        return [FormVC(msg.view), Send(ALL, vc)]
    return []

"""Omniscient trace analysis: run metrics plus machine-checked invariants.

The analyzer replays the clock model from the header (initial values, rates)
and the observed forwards, so it can evaluate any processor's clock at any
instant without trusting the simulator's bookkeeping twice. Everything else
is recomputed from the records: view entries, certificate sightings, word
counts. Checks that depend on a hypothesis (a timely window, an uncorrupted
leader) are evaluated against the recorded data and skipped as vacuous when
the hypothesis fails, never silently weakened.

Violations are data, not exceptions: each carries the invariant id and the
sequence number of the offending record, so a planted fault can be located
in the trace it came from.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, NamedTuple, Optional, Sequence

from .constants import RESPONSE_STEPS_C, WORD_RATE_W
from .core import PermutationSchedule, ProtocolParams, RoundRobinSchedule, leader_of
from .simnet import subseed
from .timeutil import Time, from_ticks, to_frac
from .trace import Record


class TraceAnalysisError(Exception):
    """The trace is structurally valid JSON but semantically unusable."""


class Violation(NamedTuple):
    invariant: str
    seq: int
    detail: str = ""


@dataclass
class RunMetrics:
    """Headline numbers for one run, in real time units.

    t_star is the first time strictly after stabilisation at which a correct
    leader assembles a quorum certificate, or None if the trace ends first.
    f_star counts the obstructing corrupted-leader groups that the latency
    and word bounds are allowed to charge for.
    """

    t_star: Optional[Fraction]
    latency: Optional[Fraction]
    words_counted: int
    f_star: int
    first_sync_view: Optional[int]
    violations: list[Violation] = field(default_factory=list)


INF = math.inf


def _ticks(value, grid: int, seq: int) -> Time:
    """Parse a rational time string into (possibly fractional) ticks."""
    try:
        return int(value) * grid
    except (ValueError, TypeError):
        pass
    try:
        f = Fraction(value) * grid
    except (ValueError, ZeroDivisionError, TypeError):
        raise TraceAnalysisError(f"malformed time {value!r} at seq {seq}") from None
    return f.numerator if f.denominator == 1 else f


class _Proc:
    __slots__ = (
        "rate",
        "offset",
        "view",
        "corrupted_at",
        "offset_log",
        "entries",
        "sent_view_msgs",
        "sent_votes",
        "qc_receipt",
    )

    def __init__(self, offset: Time, rate):
        self.rate = rate
        self.offset = offset
        self.view = 0
        self.corrupted_at: Any = INF
        self.offset_log: list[tuple[int, Any]] = [(-1, offset)]  # (seq, offset)
        self.entries: list[tuple[Any, int, int]] = [(0, 0, -1)]  # (time, view, seq)
        self.sent_view_msgs: set[int] = set()
        self.sent_votes: set[int] = set()
        self.qc_receipt: dict[int, tuple[Any, int]] = {}  # view -> (time, seq)

    def clock(self, now):
        return self.offset + self.rate * now

    def clock_before(self, now, seq: int):
        """Clock value using the offset in force just before record seq."""
        idx = max(bisect_right(self.offset_log, (seq - 1, INF)) - 1, 0)
        return self.offset_log[idx][1] + self.rate * now

    def correct_at(self, now) -> bool:
        return now < self.corrupted_at


class _Analyzer:
    def __init__(self, records: Sequence[Record]):
        if not records or records[0].get("kind") != "header":
            raise TraceAnalysisError("trace must start with a header record")
        header = records[0]
        try:
            cfg = header["config"]
            self.records = records
            self.grid = header["grid"]
            self.n = cfg["n"]
            self.t = cfg["t"]
            self.k = cfg["k"]
            self.seed = cfg["seed"]
            self.network = cfg["network"]
            g = self.grid
            self.gamma = _ticks(cfg["gamma"], g, 0)
            self.delta_cap = _ticks(cfg["delta_cap"], g, 0)
            self.delta_actual = _ticks(cfg["delta_actual"], g, 0)
            self.gst = _ticks(cfg["gst"], g, 0)
            self.horizon = _ticks(cfg["horizon"], g, 0)
            self.windows = None
            if cfg.get("sync_windows") is not None:
                self.windows = [
                    (_ticks(s, g, 0), None if e is None else _ticks(e, g, 0))
                    for s, e in cfg["sync_windows"]
                ]
            if cfg["leaders"] == "round_robin":
                schedule = RoundRobinSchedule(self.n)
            else:
                schedule = PermutationSchedule(self.n, subseed(self.seed, "leaders"))
            self.params = ProtocolParams(
                n=self.n, t=self.t, k=self.k, gamma=self.gamma, schedule=schedule
            )
            rates = [to_frac(r) for r in cfg["rates"]]
            offsets = [_ticks(o, g, 0) for o in cfg["offsets"]]
            self.corruption_time = {
                c["proc"]: _ticks(c["time"], g, 0) for c in cfg["corruptions"]
            }
        except (KeyError, TypeError) as exc:
            raise TraceAnalysisError(f"header is missing or malformed: {exc}") from None
        self.period = self.k * self.gamma
        self.uniform_rates = all(r == 1 for r in rates)
        self.procs = [_Proc(offsets[p], 1 if rates[p] == 1 else rates[p]) for p in range(self.n)]
        self.never_corrupted = frozenset(range(self.n)) - set(self.corruption_time)
        self.max_initial = max(offsets[p] for p in self.never_corrupted)

        self.violations: list[Violation] = []
        self.signatures: set[tuple[int, str, int]] = set()
        self.checked_certs: set[tuple] = set()
        self.word_events: list[tuple[Any, int]] = []  # (send_time, words), correct senders
        self.qc_first_sight: dict[int, Any] = {}  # view -> first correct sighting time
        self.qc_formations: list[tuple[Any, int, int, int]] = []  # (time, proc, view, seq)
        self.underlying_deliveries: dict[int, list] = {}
        self.qc_deliveries: dict[int, list] = {}
        self.end_seq: int = records[-1]["seq"]
        self.end_time: Time = _ticks(records[-1]["time"], self.grid, self.end_seq)
        self._gst_seq: Optional[int] = None

    # -- helpers -------------------------------------------------------------

    def flag(self, invariant: str, seq: int, detail: str = "") -> None:
        self.violations.append(Violation(invariant, seq, detail))

    def leader(self, view: int) -> int:
        return leader_of(view, self.params)

    def _sync_start(self, send: Any) -> Any:
        if self.windows is None:
            return self.gst
        for start, end in self.windows:
            if end is not None and send >= end:
                continue
            return start
        return INF

    def _check_dagger_now(self, now, seq: int) -> None:
        clocks = sorted(
            (pr.clock(now) for pr in self.procs if pr.correct_at(now)), reverse=True
        )
        if not clocks:
            return
        if len(clocks) <= self.t or clocks[self.t] < clocks[0] - self.gamma:
            self.flag("dagger", seq, f"correct clock dispersion exceeded at {now} ticks")

    def _check_certificate(self, kind: str, view: int, signers: Sequence[int], seq: int) -> None:
        key = (kind, view, tuple(signers))
        if key in self.checked_certs:
            return
        self.checked_certs.add(key)
        distinct = set(signers)
        sig_kind = "view_msg" if kind == "vc" else "vote"
        needed = self.t + 1 if kind == "vc" else self.n - self.t
        if (
            len(distinct) != len(signers)
            or len(signers) != needed
            or any(not 0 <= s < self.n for s in signers)
        ):
            self.flag(
                "certificate_signatures", seq, f"malformed {kind} for view {view}: {signers}"
            )
            return
        for s in signers:
            if (s, sig_kind, view) not in self.signatures:
                self.flag(
                    "certificate_signatures", seq, f"signer {s} never signed view {view}"
                )
        honest = len(distinct & self.never_corrupted)
        if kind == "vc" and honest < 1:
            self.flag("vc_honesty", seq, f"view certificate {view} lacks a correct signer")
        if kind == "qc" and honest < self.t + 1:
            self.flag(
                "qc_honesty", seq, f"quorum certificate {view} has {honest} correct signers"
            )

    # -- the scan ------------------------------------------------------------

    def scan(self) -> None:
        g = self.grid
        recheck_dagger = True
        for rec in self.records:
            seq = rec["seq"]
            kind = rec["kind"]
            if kind == "header":
                self._check_dagger_now(0, seq)
                continue
            now = _ticks(rec["time"], g, seq)
            if kind == "corrupt":
                p = rec["proc"]
                self.procs[p].corrupted_at = min(self.procs[p].corrupted_at, now)
                recheck_dagger = True
            elif kind == "send":
                self._scan_send(rec, now, seq)
            elif kind == "deliver":
                if self._scan_stamp(
                    rec["recipient"], rec["proc_view"], _ticks(rec["proc_clock"], g, seq), now, seq
                ):
                    recheck_dagger = True
                self._scan_deliver(rec, now, seq)
            elif kind == "threshold":
                boundary = _ticks(rec["boundary_clock"], g, seq)
                if boundary % self.period != 0:
                    self.flag("threshold_alignment", seq, f"threshold at clock {boundary}")
                if self._scan_stamp(rec["proc"], rec["proc_view"], boundary, now, seq):
                    recheck_dagger = True
            elif kind == "form_vc":
                self._check_certificate("vc", rec["view"], rec["signers"], seq)
            elif kind == "form_qc":
                self._scan_form_qc(rec, now, seq)
            elif kind in ("wake", "end"):
                pass
            else:
                raise TraceAnalysisError(f"unknown record kind {kind!r} at seq {seq}")
            if recheck_dagger or not self.uniform_rates:
                self._check_dagger_now(now, seq)
                recheck_dagger = False

    def _scan_send(self, rec: Record, now, seq: int) -> None:
        sender = rec["sender"]
        payload = rec["payload"]
        ptype = payload["type"]
        pr = self.procs[sender]
        correct = pr.correct_at(now)
        if ptype == "view_message":
            self.signatures.add((payload["signer"], "view_msg", payload["view"]))
            if correct:
                view = payload["view"]
                if payload["signer"] != sender:
                    self.flag("signing_clock", seq, "correct sender signed for another id")
                elif view in pr.sent_view_msgs:
                    self.flag("duplicate_view_message", seq, f"second view message for {view}")
                pr.sent_view_msgs.add(view)
                if pr.clock(now) < view * self.gamma:
                    self.flag(
                        "signing_clock",
                        seq,
                        f"view message {view} signed below clock {view * self.gamma}",
                    )
        elif ptype == "vote":
            self.signatures.add((payload["signer"], "vote", payload["view"]))
            if correct:
                view = payload["view"]
                if payload["signer"] != sender:
                    self.flag("vote_view", seq, "correct sender voted for another id")
                elif view in pr.sent_votes:
                    self.flag("duplicate_vote", seq, f"second vote for {view}")
                pr.sent_votes.add(view)
                if pr.view != view:
                    self.flag("vote_view", seq, f"vote for {view} while in view {pr.view}")
        elif ptype == "view_certificate":
            self._check_certificate("vc", payload["view"], payload["signers"], seq)
        elif ptype == "quorum_certificate":
            self._check_certificate("qc", payload["view"], payload["signers"], seq)
        if correct and rec["words"]:
            self.word_events.append((now, rec["words"]))

    def _scan_stamp(self, p: int, view: int, clock, now, seq: int) -> bool:
        """Fold one observed (view, clock) snapshot into the replayed model.

        Returns True when the processor's clock was forwarded here.
        """
        pr = self.procs[p]
        if not pr.correct_at(now):
            return False
        expected = pr.clock(now)
        forwarded = False
        if clock < expected:
            self.flag("clock_monotonicity", seq, f"processor {p} clock moved backwards")
        elif clock > expected:
            pr.offset = clock - pr.rate * now
            pr.offset_log.append((seq, pr.offset))
            forwarded = True
        if view < pr.view:
            self.flag("view_monotonicity", seq, f"processor {p} view moved backwards")
        elif view > pr.view:
            pr.view = view
            pr.entries.append((now, view, seq))
        return forwarded

    def _scan_deliver(self, rec: Record, now, seq: int) -> None:
        g = self.grid
        send_time = _ticks(rec["send_time"], g, seq)
        sender, recipient = rec["sender"], rec["recipient"]
        payload = rec["payload"]
        if sender == recipient:
            if now != send_time:
                self.flag("delivery_bound", seq, "self delivery not instantaneous")
        else:
            sync = self._sync_start(send_time)
            bound = max(sync, send_time) + self.delta_cap
            if now <= send_time or now > bound:
                self.flag(
                    "delivery_bound", seq, f"delivery at {now} outside ({send_time}, {bound}]"
                )
            elif (
                self.network != "worst_case_max_delay"
                and sync <= send_time
                and now > send_time + self.delta_actual
            ):
                self.flag("delivery_bound", seq, "post-stabilisation delivery exceeded delta")
        ptype = payload["type"]
        view = payload["view"]
        if ptype == "quorum_certificate":
            self._check_certificate("qc", view, payload["signers"], seq)
            if recipient in self.never_corrupted:
                self.procs[recipient].qc_receipt.setdefault(view, (now, seq))
                if view not in self.qc_first_sight or now < self.qc_first_sight[view]:
                    self.qc_first_sight[view] = now
                self.qc_deliveries.setdefault(view, []).append((send_time, now, sender))
        elif ptype == "view_certificate":
            self._check_certificate("vc", view, payload["signers"], seq)
        elif ptype in ("proposal", "vote"):
            if recipient in self.never_corrupted:
                self.underlying_deliveries.setdefault(view, []).append((send_time, now, sender))

    def _scan_form_qc(self, rec: Record, now, seq: int) -> None:
        view, proc = rec["view"], rec["proc"]
        self._check_certificate("qc", view, rec["signers"], seq)
        self.qc_formations.append((now, proc, view, seq))
        if proc in self.never_corrupted:
            self.procs[proc].qc_receipt.setdefault(view, (now, seq))
            if view not in self.qc_first_sight or now < self.qc_first_sight[view]:
                self.qc_first_sight[view] = now

    # -- post-scan passes ----------------------------------------------------

    def all_entries(self) -> list[tuple[Any, int, int, int]]:
        out = []
        for p in self.never_corrupted:
            for when, view, seq in self.procs[p].entries:
                out.append((when, view, seq, p))
        out.sort(key=lambda e: (e[0], e[2]))
        return out

    def first_entry_times(self) -> dict[int, Any]:
        t_of: dict[int, Any] = {}
        for when, view, _seq, _p in self.all_entries():
            if view not in t_of:
                t_of[view] = when
        return t_of

    def _clean_start(self) -> Time:
        """Lowest boundary clock value no correct processor started beyond.

        Boundary views below a correct starting clock are already stale when
        the run begins, so the entry-ordering claims only apply from here up.
        """
        return -(-self.max_initial // self.period) * self.period

    def check_first_entry(self, entries) -> None:
        if not entries:
            return
        max_view = max(v for _, v, _, _ in entries)
        for cv in range(self._clean_start(), max_view * self.gamma + 1, self.period):
            v = cv // self.gamma
            at_or_above = [e for e in entries if e[1] >= v]
            if not at_or_above:
                continue
            tau = min(e[0] for e in at_or_above)
            firsts = [e for e in at_or_above if e[0] == tau]
            entry_seq = min(e[2] for e in firsts)
            for _when, view, seq, _p in firsts:
                if view != v:
                    self.flag(
                        "first_entry_order",
                        max(seq, 0),
                        f"first crossing of view {v} entered {view} instead",
                    )
            for q in range(self.n):
                pr = self.procs[q]
                if not pr.correct_at(tau):
                    continue
                if pr.clock_before(tau, entry_seq) > cv:
                    self.flag(
                        "first_entry_clocks",
                        max(entry_seq, 0),
                        f"processor {q} clock above {cv} when view {v} first entered",
                    )

    def check_entry_identity(self, t_of: dict[int, Any]) -> None:
        """First-entry recurrence between consecutive boundary views.

        Exact only for drift-free clocks: the next boundary is reached either
        by the previous first entrant running one full group, or by someone
        forwarded off a certificate sighting and running out the remainder.
        """
        if not self.uniform_rates:
            return
        clean = self._clean_start()
        for v in sorted(v for v in t_of if v % self.k == 0):
            if v * self.gamma < clean or v + self.k not in t_of:
                continue
            candidates = [t_of[v] + self.period]
            for j in range(self.k):
                s_j = self.qc_first_sight.get(v + j)
                if s_j is not None:
                    candidates.append(s_j + (self.k - 1 - j) * self.gamma)
            want = min(candidates)
            if t_of[v + self.k] != want:
                self.flag(
                    "entry_time_identity",
                    self.end_seq,
                    f"entry into {v + self.k} at {t_of[v + self.k]}, recurrence gives {want}",
                )

    def check_qc_before_advance(self, t_of: dict[int, Any]) -> None:
        """Nobody leaves a correct leader's group without its early quorums.

        Needs uninterrupted timeliness from the group entry onward, so it is
        not applied to runs whose synchrony comes in windows.
        """
        if self.windows is not None:
            return
        clean = self._clean_start()
        for v in sorted(v for v in t_of if v % self.k == 0):
            if v * self.gamma < clean:
                continue
            if self.leader(v) not in self.never_corrupted or t_of[v] < self.gst:
                continue
            needed = range(v, v + self.k - 2)
            for p in self.never_corrupted:
                pr = self.procs[p]
                advance = next(
                    ((when, seq) for when, view, seq in pr.entries if view >= v + self.k),
                    None,
                )
                if advance is None:
                    continue
                _when, adv_seq = advance
                for u in needed:
                    got = pr.qc_receipt.get(u)
                    if got is None or got[1] >= adv_seq:
                        self.flag(
                            "qc_before_advance",
                            max(adv_seq, 0),
                            f"processor {p} reached view {v + self.k} without the quorum for {u}",
                        )

    def compute_t_star(self):
        for when, proc, view, seq in self.qc_formations:
            if when > self.gst and proc in self.never_corrupted and proc == self.leader(view):
                return when, view, seq
        return None, None, None

    def count_words(self, t_star) -> int:
        lo = self.gst + self.delta_cap
        hi = t_star if t_star is not None else INF
        return sum(w for when, w in self.word_events if lo <= when <= hi)

    def _gst_record_seq(self) -> int:
        """Sequence number of the last record stamped at or before gst."""
        if self._gst_seq is None:
            g = self.grid
            last = -1
            for rec in self.records:
                if rec["kind"] == "header":
                    continue
                if _ticks(rec["time"], g, rec["seq"]) > self.gst:
                    break
                last = rec["seq"]
            self._gst_seq = last
        return self._gst_seq

    def compute_f_star(self) -> int:
        """Corrupted-leader groups chargeable against the recovery bounds.

        The pivot is the group of the most advanced never-corrupted processor
        at gst (by view held, or by clock when the boundary crossing is still
        pending). The pivot group is charged if corrupted-led, as is every
        further group up to the first with a never-corrupted leader.
        """
        at_seq = self._gst_record_seq()
        best = None
        for p in sorted(self.never_corrupted):
            pr = self.procs[p]
            clock = pr.clock_before(self.gst, at_seq + 1)
            if best is None or clock > best[0]:
                best = (clock, p)
        clock, p_star = best
        view = max(
            (v for when, v, _seq in self.procs[p_star].entries if when <= self.gst), default=0
        )
        pivot = max(view // self.k, int(clock // self.period))
        group = pivot + 1
        limit = pivot + 2 * self.n + 2
        while self.leader(group * self.k) not in self.never_corrupted:
            group += 1
            if group > limit:
                raise TraceAnalysisError("no correct leader in the groups above the pivot")
        f_star = group - pivot - 1
        if self.leader(pivot * self.k) not in self.never_corrupted:
            f_star += 1
        return f_star

    def check_bounds(self, t_star, t_star_seq, f_star: int, words: int) -> None:
        bound = self.k * (f_star + 3) * self.gamma
        if t_star is not None:
            if t_star - self.gst > bound:
                self.flag(
                    "latency_bound",
                    t_star_seq,
                    f"latency {t_star - self.gst} exceeds {bound} ticks",
                )
            if words > WORD_RATE_W * (f_star + 3) * self.n:
                self.flag(
                    "word_bound",
                    t_star_seq,
                    f"{words} words exceed {WORD_RATE_W * (f_star + 3) * self.n}",
                )
        elif self.horizon >= self.gst + bound:
            self.flag("latency_bound", self.end_seq, "no correct-leader quorum within the bound")
        if (
            t_star is not None
            and not self.corruption_time
            and self.network != "worst_case_max_delay"
            and self.delta_actual * 10 <= self.delta_cap
            and len({pr.offset_log[0][1] for pr in self.procs}) == 1
        ):
            resp = RESPONSE_STEPS_C * self.delta_actual + self.gamma + self.delta_cap
            if t_star - self.gst > resp:
                self.flag(
                    "responsiveness",
                    t_star_seq,
                    f"latency {t_star - self.gst} exceeds responsive bound {resp}",
                )

    def check_post_sync(self, t_star, t_star_view) -> None:
        """Steady-state pace: consecutive correct-led groups after the first
        synchronised quorum stay within the per-gap latency and word budget."""
        if t_star is None or self.windows is not None or not self.uniform_rates:
            return
        delta_eff = self.delta_cap if self.network == "worst_case_max_delay" else self.delta_actual
        group_qc: dict[int, Any] = {}
        for when, proc, view, _seq in self.qc_formations:
            if when <= self.gst or proc not in self.never_corrupted:
                continue
            if proc != self.leader(view):
                continue
            group = view // self.k
            if group not in group_qc or when < group_qc[group]:
                group_qc[group] = when
        words_sorted = sorted(self.word_events)
        times = [w[0] for w in words_sorted]
        cum = [0]
        for _when, w in words_sorted:
            cum.append(cum[-1] + w)

        def words_between(lo, hi) -> int:
            return cum[bisect_right(times, hi)] - cum[bisect_left(times, lo)]

        correct_led = [
            g
            for g in range(t_star_view // self.k, max(group_qc) + 1)
            if self.leader(g * self.k) in self.never_corrupted
        ]
        for ga, gb in zip(correct_led, correct_led[1:]):
            if ga not in group_qc or gb not in group_qc:
                continue
            gap = gb - ga - 1
            elapsed = group_qc[gb] - group_qc[ga]
            allowed = self.k * (gap + 1) * self.gamma + RESPONSE_STEPS_C * delta_eff
            if elapsed > allowed:
                self.flag(
                    "post_sync_latency",
                    self.end_seq,
                    f"groups {ga}->{gb} took {elapsed} ticks, allowed {allowed}",
                )
            w = words_between(group_qc[ga], group_qc[gb])
            if w > WORD_RATE_W * (gap + 1) * self.n:
                self.flag(
                    "post_sync_words",
                    self.end_seq,
                    f"groups {ga}->{gb} sent {w} words, allowed {WORD_RATE_W * (gap + 1) * self.n}",
                )

    def check_underlying_contract(self) -> None:
        """Quorum liveness inside one view: from the first post-gst instant
        with n-t correct processors in view v and its correct leader among
        them, provided they hold the view and the view's traffic met the
        actual delay, every never-corrupted processor holds the quorum
        certificate within three message delays."""
        delta = self.delta_cap if self.network == "worst_case_max_delay" else self.delta_actual
        need = self.n - self.t
        intervals: dict[int, list[tuple[Any, Any, int]]] = {}
        for p in self.never_corrupted:
            ents = self.procs[p].entries
            for i, (when, view, _seq) in enumerate(ents):
                until = ents[i + 1][0] if i + 1 < len(ents) else INF
                intervals.setdefault(view, []).append((when, until, p))
        for view, spans in intervals.items():
            if len(spans) < need:
                continue
            lead = self.leader(view)
            if lead not in self.never_corrupted:
                continue
            lead_span = next((s for s in spans if s[2] == lead), None)
            if lead_span is None:
                continue
            # membership only grows at span starts, so checking gst and each
            # later start finds the earliest instant with a full quorum
            candidates = sorted({self.gst} | {s[0] for s in spans if s[0] > self.gst})
            s = None
            for cand in candidates:
                if sum(1 for start, until, _p in spans if start <= cand < until) >= need:
                    s = cand
                    break
            if s is None or not lead_span[0] <= s < lead_span[1]:
                continue
            deadline = s + 3 * delta
            if deadline >= self.end_time:
                continue  # the trace stops before the conclusion is due
            timely = all(
                now <= max(self.gst, send) + delta
                for send, now, sender in self.underlying_deliveries.get(view, ())
                if self.procs[sender].correct_at(send)
            ) and all(
                now <= max(self.gst, send) + delta
                for send, now, sender in self.qc_deliveries.get(view, ())
                if self.procs[sender].correct_at(send)
            )
            if not timely:
                continue
            quorum = [sp for sp in spans if sp[0] <= s < sp[1]]
            held = all(
                until >= min(self.procs[p].qc_receipt.get(view, (INF,))[0], deadline)
                for _start, until, p in quorum
            )
            if not held:
                continue
            for p in self.never_corrupted:
                got = self.procs[p].qc_receipt.get(view)
                if got is None or got[0] > deadline:
                    self.flag(
                        "underlying_contract",
                        self.end_seq,
                        f"processor {p} lacked the view {view} quorum by {deadline} ticks",
                    )

    # -- orchestration -------------------------------------------------------

    def analyze(self) -> RunMetrics:
        self.scan()
        entries = self.all_entries()
        t_of = self.first_entry_times()
        self.check_first_entry(entries)
        self.check_entry_identity(t_of)
        self.check_qc_before_advance(t_of)
        t_star, t_star_view, t_star_seq = self.compute_t_star()
        f_star = self.compute_f_star()
        words = self.count_words(t_star)
        self.check_bounds(t_star, t_star_seq, f_star, words)
        self.check_post_sync(t_star, t_star_view)
        self.check_underlying_contract()
        return RunMetrics(
            t_star=None if t_star is None else from_ticks(t_star, self.grid),
            latency=None if t_star is None else from_ticks(t_star - self.gst, self.grid),
            words_counted=words,
            f_star=f_star,
            first_sync_view=t_star_view,
            violations=self.violations,
        )


def analyze(records: Sequence[Record]) -> RunMetrics:
    """Full analysis of one trace: headline metrics plus every invariant."""
    return _Analyzer(records).analyze()


def assert_invariants(records: Sequence[Record], config=None) -> list[Violation]:
    """All invariant violations in a trace (empty list = conforming run)."""
    if config is not None:
        header = records[0].get("config", {}) if records else {}
        for field_name, want in (("n", config.n), ("seed", config.seed)):
            if header.get(field_name) != want:
                raise TraceAnalysisError(
                    f"trace header {field_name}={header.get(field_name)!r} does not match config"
                )
    return analyze(records).violations


def compute_t_star(records: Sequence[Record], gst, params: ProtocolParams):
    """Independent check: first post-gst quorum formed by a correct leader.

    Deliberately a flat scan over raw records rather than a call into the
    analyzer, so tests can cross-check the two paths against each other.
    Returns a real-unit Fraction, or math.inf when no such event exists.
    """
    if not records or records[0].get("kind") != "header":
        raise TraceAnalysisError("trace must start with a header record")
    corrupted = {c["proc"] for c in records[0]["config"]["corruptions"]}
    gst = to_frac(gst)
    for rec in records:
        if rec["kind"] != "form_qc":
            continue
        when = to_frac(rec["time"])
        if when <= gst or rec["proc"] in corrupted:
            continue
        if rec["proc"] == leader_of(rec["view"], params):
            return when
    return INF


def count_words(records: Sequence[Record], gst, delta_cap, t_star) -> int:
    """Independent check: words from correct senders in [gst+delta, t_star]."""
    if not records or records[0].get("kind") != "header":
        raise TraceAnalysisError("trace must start with a header record")
    corruption_at = {
        c["proc"]: to_frac(c["time"]) for c in records[0]["config"]["corruptions"]
    }
    lo = to_frac(gst) + to_frac(delta_cap)
    hi = INF if t_star is None or t_star is INF else to_frac(t_star)
    total = 0
    for rec in records:
        if rec["kind"] != "send" or not rec["words"]:
            continue
        when = to_frac(rec["time"])
        if not lo <= when <= hi:
            continue
        cut = corruption_at.get(rec["sender"])
        if cut is not None and when >= cut:
            continue
        total += rec["words"]
    return total


def compute_f_star(records: Sequence[Record], params: ProtocolParams) -> int:
    """Corrupted-leader groups charged by the bounds; see the analyzer."""
    analyzer = _Analyzer(records)
    if (analyzer.n, analyzer.t, analyzer.k) != (params.n, params.t, params.k):
        raise TraceAnalysisError("params do not match the trace header")
    analyzer.scan()
    return analyzer.compute_f_star()

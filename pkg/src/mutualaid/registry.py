"""Service coordination center.

Stores advertisements and pending requests, expires them at their deadlines,
pairs peer participants symmetrically, and runs a two-sided confirmation
handshake. Every state change appends to a totally ordered event log, so
replaying the same command sequence reproduces the log byte for byte.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .matching import (
    MatchVerdict,
    ServiceAdvertisement,
    ServiceForm,
    ServiceRequest,
    match_request,
    rank_matches,
)
from .taxonomy import Taxonomy

# Provider class every participant-seeking request advertises toward its peers.
PARTICIPANT_CLASS = "participant"


class RegistryError(Exception):
    """Base class for coordination-center command failures."""


class DuplicateIdError(RegistryError):
    pass


class ExpiredDeadlineError(RegistryError):
    pass


class TimeRegressionError(RegistryError):
    pass


class UnknownProposalError(RegistryError):
    pass


class ProposalResolvedError(RegistryError):
    pass


class DoubleResponseError(RegistryError):
    pass


class EventKind(enum.Enum):
    SUBMITTED = "submitted"
    NO_MATCH = "no_match"
    PROPOSED = "proposed"
    ACCEPTED = "accepted"
    DECLINED = "declined"
    CONFIRMED = "confirmed"
    CONTACT_EXCHANGED = "contact_exchanged"
    EXPIRED = "expired"


@dataclass(frozen=True)
class Event:
    time: int
    kind: EventKind
    refs: tuple[tuple[str, str], ...]

    def to_dict(self) -> dict:
        d = {"time": self.time, "kind": self.kind.value}
        d.update(dict(self.refs))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _event(time: int, kind: EventKind, **refs: str) -> Event:
    return Event(time, kind, tuple(sorted(refs.items())))


class Answer(enum.Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    DECLINED = "declined"


class ProposalStatus(enum.Enum):
    OPEN = "open"
    CONFIRMED = "confirmed"
    DISSOLVED = "dissolved"


@dataclass
class MatchProposal:
    id: str
    side_a: str  # request id
    side_b: str  # request id or advertisement id
    b_is_request: bool
    verdict: MatchVerdict
    proposed_time: int
    activity_deadline: int | None
    accept_a: Answer = Answer.PENDING
    accept_b: Answer = Answer.PENDING
    status: ProposalStatus = ProposalStatus.OPEN
    # request bodies by id, kept so a dissolved side can return to pending
    requests: dict[str, ServiceRequest] = field(default_factory=dict)


def _min_deadline(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _participant_advert(req: ServiceRequest) -> ServiceAdvertisement:
    """The facets a participant-seeking request advertises toward a peer."""
    return ServiceAdvertisement(
        id=req.id,
        provider_class=PARTICIPANT_CLASS,
        service_type=req.wanted_service_type,
        location=req.location,
        deadline=req.deadline,
        form=ServiceForm.PARTICIPANT_SEEKING,
    )


class CoordinationCenter:
    """Single-owner matchmaker state; callers serialize all mutations."""

    def __init__(self, taxonomy: Taxonomy, start_time: int = 0):
        self.taxonomy = taxonomy
        self.clock = start_time
        self.adverts: dict[str, ServiceAdvertisement] = {}
        self.pending: dict[str, ServiceRequest] = {}
        self.proposals: dict[str, MatchProposal] = {}
        self.event_log: list[Event] = []
        self._next_proposal = 1

    # -- internals ---------------------------------------------------------

    def _emit(self, kind: EventKind, **refs: str) -> Event:
        ev = _event(self.clock, kind, **refs)
        self.event_log.append(ev)
        return ev

    def _new_proposal_id(self) -> str:
        pid = f"p{self._next_proposal}"
        self._next_proposal += 1
        return pid

    def _known_id(self, id_: str) -> bool:
        if id_ in self.adverts or id_ in self.pending:
            return True
        return any(
            p.status is ProposalStatus.OPEN and id_ in (p.side_a, p.side_b)
            for p in self.proposals.values()
        )

    def _open_proposal(
        self,
        req: ServiceRequest,
        other: ServiceRequest | ServiceAdvertisement,
        verdict: MatchVerdict,
    ) -> MatchProposal:
        b_is_request = isinstance(other, ServiceRequest)
        bodies = {req.id: req}
        if b_is_request:
            bodies[other.id] = other
        prop = MatchProposal(
            id=self._new_proposal_id(),
            side_a=req.id,
            side_b=other.id,
            b_is_request=b_is_request,
            verdict=verdict,
            proposed_time=self.clock,
            activity_deadline=_min_deadline(req.deadline, other.deadline),
            requests=bodies,
        )
        self.proposals[prop.id] = prop
        self._emit(EventKind.PROPOSED, proposal=prop.id, side_a=prop.side_a, side_b=prop.side_b)
        return prop

    def _try_match(self, req: ServiceRequest, emit_no_match: bool) -> bool:
        """Attempt an immediate match for `req`; park it in pending on failure.

        Provided-form requests match against stored advertisements; participant
        requests match other pending participant requests, requiring both
        directions to accept.
        """
        if req.form is ServiceForm.PROVIDED:
            ranked = rank_matches(self.taxonomy, req, list(self.adverts.values()), self.clock)
            if ranked:
                adv, verdict = ranked[0]
                self._open_proposal(req, adv, verdict)
                return True
        else:
            peers = [r for r in self.pending.values()
                     if r.form is ServiceForm.PARTICIPANT_SEEKING and r.id != req.id]
            pseudo = {r.id: _participant_advert(r) for r in peers}
            ranked = rank_matches(self.taxonomy, req, list(pseudo.values()), self.clock)
            own_advert = _participant_advert(req)
            for adv, verdict in ranked:
                peer = self.pending[adv.id]
                reverse = match_request(self.taxonomy, peer, own_advert, self.clock)
                if reverse.overall:
                    del self.pending[peer.id]
                    self._open_proposal(req, peer, verdict)
                    return True
        if emit_no_match:
            self._emit(EventKind.NO_MATCH, request=req.id)
        self.pending[req.id] = req
        return False

    def _restore_request(self, req: ServiceRequest) -> None:
        """Return a request to pending and immediately try to re-match it."""
        self._try_match(req, emit_no_match=False)

    # -- commands ----------------------------------------------------------

    def submit_advertisement(self, adv: ServiceAdvertisement) -> list[Event]:
        if self._known_id(adv.id):
            raise DuplicateIdError(f"id already in use: {adv.id!r}")
        mark = len(self.event_log)
        self.adverts[adv.id] = adv
        self._emit(EventKind.SUBMITTED, advertisement=adv.id)

        if adv.form is ServiceForm.PROVIDED:
            matched: list[tuple[ServiceRequest, MatchVerdict]] = []
            for req in self.pending.values():
                if req.form is not ServiceForm.PROVIDED:
                    continue
                verdict = match_request(self.taxonomy, req, adv, self.clock)
                if verdict.overall:
                    matched.append((req, verdict))
            matched.sort(key=lambda pair: (
                -pair[1].type_degree.value, -pair[1].provider_degree.value, pair[0].id))
            for req, verdict in matched:
                del self.pending[req.id]
                self._open_proposal(req, adv, verdict)
        return self.event_log[mark:]

    def submit_request(self, req: ServiceRequest) -> list[Event]:
        if self._known_id(req.id):
            raise DuplicateIdError(f"id already in use: {req.id!r}")
        if req.deadline is not None and req.deadline < self.clock:
            raise ExpiredDeadlineError(
                f"request {req.id!r} deadline {req.deadline} is before clock {self.clock}")
        mark = len(self.event_log)
        self._emit(EventKind.SUBMITTED, request=req.id)
        self._try_match(req, emit_no_match=True)
        return self.event_log[mark:]

    def respond(self, proposal_id: str, side: str, answer: Answer) -> list[Event]:
        if answer not in (Answer.ACCEPTED, Answer.DECLINED):
            raise ValueError("answer must be ACCEPTED or DECLINED")
        if side not in ("a", "b"):
            raise ValueError("side must be 'a' or 'b'")
        prop = self.proposals.get(proposal_id)
        if prop is None:
            raise UnknownProposalError(f"unknown proposal: {proposal_id!r}")
        if prop.status is not ProposalStatus.OPEN:
            raise ProposalResolvedError(f"proposal {proposal_id} already {prop.status.value}")
        current = prop.accept_a if side == "a" else prop.accept_b
        if current is not Answer.PENDING:
            raise DoubleResponseError(f"side {side} of {proposal_id} already answered")

        mark = len(self.event_log)
        if side == "a":
            prop.accept_a = answer
        else:
            prop.accept_b = answer
        kind = EventKind.ACCEPTED if answer is Answer.ACCEPTED else EventKind.DECLINED
        self._emit(kind, proposal=prop.id, side=side)

        if answer is Answer.DECLINED:
            prop.status = ProposalStatus.DISSOLVED
            # The decliner withdraws; the other side's request goes back to
            # pending and is immediately re-matched.
            survivor_id = prop.side_b if side == "a" else prop.side_a
            survivor_is_request = prop.b_is_request if side == "a" else True
            if survivor_is_request:
                survivor = self._proposal_request(prop, survivor_id)
                self._restore_request(survivor)
        elif prop.accept_a is Answer.ACCEPTED and prop.accept_b is Answer.ACCEPTED:
            prop.status = ProposalStatus.CONFIRMED
            self._emit(EventKind.CONFIRMED, proposal=prop.id)
            self._emit(EventKind.CONTACT_EXCHANGED,
                       proposal=prop.id, side_a=prop.side_a, side_b=prop.side_b)
        return self.event_log[mark:]

    def _proposal_request(self, prop: MatchProposal, req_id: str) -> ServiceRequest:
        return prop.requests[req_id]

    def advance_clock(self, new_time: int) -> list[Event]:
        if new_time < self.clock:
            raise TimeRegressionError(f"clock cannot move from {self.clock} back to {new_time}")
        mark = len(self.event_log)
        self.clock = new_time

        restored: list[ServiceRequest] = []
        for pid in sorted(self.proposals, key=lambda p: int(p[1:])):
            prop = self.proposals[pid]
            if prop.status is not ProposalStatus.OPEN:
                continue
            if prop.activity_deadline is not None and prop.activity_deadline < new_time:
                prop.status = ProposalStatus.DISSOLVED
                self._emit(EventKind.EXPIRED, proposal=prop.id)
                for rid, is_req in ((prop.side_a, True), (prop.side_b, prop.b_is_request)):
                    if not is_req:
                        continue
                    req = self._proposal_request(prop, rid)
                    if req.deadline is not None and req.deadline < new_time:
                        self._emit(EventKind.EXPIRED, request=rid)
                    else:
                        restored.append(req)

        for rid in list(self.pending):
            req = self.pending[rid]
            if req.deadline is not None and req.deadline < new_time:
                del self.pending[rid]
                self._emit(EventKind.EXPIRED, request=rid)

        for req in restored:
            self._restore_request(req)
        return self.event_log[mark:]


class ScenarioError(RegistryError):
    """A scenario command failed; carries the offending command index."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"command {index} failed: {cause}")
        self.index = index
        self.cause = cause


def replay_scenario(taxonomy: Taxonomy, commands: list[dict]) -> list[Event]:
    """Execute a JSON scenario (list of command objects) and return the event log.

    Command shapes:
      {"cmd": "advance_clock", "time": <int>}
      {"cmd": "submit_request", "request": {...}}
      {"cmd": "submit_advertisement", "advertisement": {...}}
      {"cmd": "respond", "proposal": "<id>", "side": "a"|"b", "answer": "accepted"|"declined"}
    """
    center = CoordinationCenter(taxonomy)
    for i, command in enumerate(commands):
        try:
            cmd = command["cmd"]
            if cmd == "advance_clock":
                center.advance_clock(int(command["time"]))
            elif cmd == "submit_request":
                center.submit_request(ServiceRequest.from_dict(command["request"]))
            elif cmd == "submit_advertisement":
                center.submit_advertisement(
                    ServiceAdvertisement.from_dict(command["advertisement"]))
            elif cmd == "respond":
                center.respond(command["proposal"], command["side"],
                               Answer(command["answer"]))
            else:
                raise RegistryError(f"unknown command {cmd!r}")
        except Exception as exc:
            raise ScenarioError(i, exc) from exc
    return center.event_log

"""Facet-wise matching of service requests against advertisements.

A request and an advertisement are compared on two concept facets (provider
class and service type), plus location, deadline and service form. Each facet
degree is graded via the taxonomy; the request carries a separate minimum
acceptable degree per concept facet.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .taxonomy import MatchDegree, Taxonomy


class ServiceForm(enum.Enum):
    PROVIDED = "provided"
    PARTICIPANT_SEEKING = "participant_seeking"

    @classmethod
    def from_name(cls, name: str) -> "ServiceForm":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown service form {name!r}") from None


def normalize_location(location: str | None) -> str | None:
    if location is None:
        return None
    loc = " ".join(location.strip().lower().split())
    return loc or None


@dataclass(frozen=True)
class ServiceAdvertisement:
    id: str
    provider_class: str
    service_type: str
    location: str | None = None
    deadline: int | None = None
    form: ServiceForm = ServiceForm.PROVIDED

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "provider_class": self.provider_class,
            "service_type": self.service_type,
            "form": self.form.value,
        }
        if self.location is not None:
            d["location"] = self.location
        if self.deadline is not None:
            d["deadline"] = self.deadline
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceAdvertisement":
        return cls(
            id=str(d["id"]),
            provider_class=d["provider_class"],
            service_type=d["service_type"],
            location=normalize_location(d.get("location")),
            deadline=d.get("deadline"),
            form=ServiceForm.from_name(d.get("form", "provided")),
        )


@dataclass(frozen=True)
class ServiceRequest:
    id: str
    wanted_provider_class: str
    wanted_service_type: str
    location: str | None = None
    deadline: int | None = None
    form: ServiceForm = ServiceForm.PROVIDED
    min_provider_degree: MatchDegree = MatchDegree.SUBSUME
    min_type_degree: MatchDegree = MatchDegree.SUBSUME

    def __post_init__(self) -> None:
        if self.min_provider_degree is MatchDegree.FAIL:
            raise ValueError("min_provider_degree must not be FAIL")
        if self.min_type_degree is MatchDegree.FAIL:
            raise ValueError("min_type_degree must not be FAIL")

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "wanted_provider_class": self.wanted_provider_class,
            "wanted_service_type": self.wanted_service_type,
            "form": self.form.value,
            "min_provider_degree": self.min_provider_degree.wire_name,
            "min_type_degree": self.min_type_degree.wire_name,
        }
        if self.location is not None:
            d["location"] = self.location
        if self.deadline is not None:
            d["deadline"] = self.deadline
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceRequest":
        return cls(
            id=str(d["id"]),
            wanted_provider_class=d["wanted_provider_class"],
            wanted_service_type=d["wanted_service_type"],
            location=normalize_location(d.get("location")),
            deadline=d.get("deadline"),
            form=ServiceForm.from_name(d.get("form", "provided")),
            min_provider_degree=MatchDegree.from_name(d.get("min_provider_degree", "subsume")),
            min_type_degree=MatchDegree.from_name(d.get("min_type_degree", "subsume")),
        )


@dataclass(frozen=True)
class MatchVerdict:
    provider_degree: MatchDegree
    type_degree: MatchDegree
    location_ok: bool
    deadline_ok: bool
    form_ok: bool
    overall: bool

    def to_dict(self) -> dict:
        return {
            "provider_degree": self.provider_degree.wire_name,
            "type_degree": self.type_degree.wire_name,
            "location_ok": self.location_ok,
            "deadline_ok": self.deadline_ok,
            "form_ok": self.form_ok,
            "overall": self.overall,
        }


def match_request(
    t: Taxonomy, req: ServiceRequest, adv: ServiceAdvertisement, now: int
) -> MatchVerdict:
    """Compare one request against one advertisement at time `now`.

    A missing location or deadline on either side is unconstrained. Deadlines
    are inclusive: a deadline equal to `now` is still alive.
    """
    provider_degree = t.match(req.wanted_provider_class, adv.provider_class)
    type_degree = t.match(req.wanted_service_type, adv.service_type)

    req_loc = normalize_location(req.location)
    adv_loc = normalize_location(adv.location)
    location_ok = req_loc is None or adv_loc is None or req_loc == adv_loc

    deadline_ok = (req.deadline is None or req.deadline >= now) and (
        adv.deadline is None or adv.deadline >= now
    )
    form_ok = req.form is adv.form

    overall = (
        provider_degree >= req.min_provider_degree
        and type_degree >= req.min_type_degree
        and location_ok
        and deadline_ok
        and form_ok
    )
    return MatchVerdict(provider_degree, type_degree, location_ok, deadline_ok, form_ok, overall)


def rank_matches(
    t: Taxonomy,
    req: ServiceRequest,
    adverts: list[ServiceAdvertisement],
    now: int,
) -> list[tuple[ServiceAdvertisement, MatchVerdict]]:
    """Evaluate every advertisement and return the accepted ones, best first.

    Sort key: type degree descending, then provider degree descending, then
    advertisement id ascending. Deterministic for fixed inputs.
    """
    accepted = []
    for adv in adverts:
        verdict = match_request(t, req, adv, now)
        if verdict.overall:
            accepted.append((adv, verdict))
    accepted.sort(key=lambda pair: (-pair[1].type_degree.value, -pair[1].provider_degree.value, pair[0].id))
    return accepted

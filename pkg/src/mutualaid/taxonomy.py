"""Concept taxonomy: a validated DAG of service-type and provider-class concepts.

The taxonomy is loaded once from a JSON document and is immutable afterwards;
all queries are pure and safe for concurrent reads.
"""

from __future__ import annotations

import enum
import json
from functools import total_ordering


class TaxonomyError(Exception):
    """Base class for taxonomy loading and query errors."""


class TaxonomyParseError(TaxonomyError):
    """The taxonomy document is not well-formed."""


class TaxonomyValidationError(TaxonomyError):
    """The taxonomy document parsed but violates a structural invariant."""


class UnknownConceptError(TaxonomyError):
    """A query referenced a concept that is not in the taxonomy."""


def normalize_concept(name: str) -> str:
    """Normalize a concept name: strip whitespace, lowercase.

    Raises TaxonomyValidationError if the result is empty.
    """
    if not isinstance(name, str):
        raise TaxonomyParseError(f"concept name must be a string, got {type(name).__name__}")
    normalized = name.strip().lower()
    if not normalized:
        raise TaxonomyValidationError("concept name is empty after normalization")
    return normalized


@total_ordering
class MatchDegree(enum.Enum):
    """Graded outcome of comparing a requested concept against an advertised one.

    Ordered FAIL < PLUGIN < SUBSUME < EXACT so that minimum-degree thresholds
    can be compared directly.
    """

    FAIL = 0
    PLUGIN = 1
    SUBSUME = 2
    EXACT = 3

    def __lt__(self, other: "MatchDegree") -> bool:
        if not isinstance(other, MatchDegree):
            return NotImplemented
        return self.value < other.value

    @classmethod
    def from_name(cls, name: str) -> "MatchDegree":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown match degree {name!r}") from None

    @property
    def wire_name(self) -> str:
        return self.name.lower()


class Taxonomy:
    """Immutable acyclic concept graph with child -> parent edges."""

    def __init__(self, concepts: list[str], edges: list[tuple[str, str]]):
        seen: set[str] = set()
        order: list[str] = []
        for raw in concepts:
            c = normalize_concept(raw)
            if c in seen:
                raise TaxonomyValidationError(f"duplicate concept declaration: {c!r}")
            seen.add(c)
            order.append(c)
        self._concepts = frozenset(seen)

        edge_set: set[tuple[str, str]] = set()
        parents: dict[str, list[str]] = {c: [] for c in order}
        for child_raw, parent_raw in edges:
            child = normalize_concept(child_raw)
            parent = normalize_concept(parent_raw)
            for endpoint in (child, parent):
                if endpoint not in seen:
                    raise TaxonomyValidationError(
                        f"edge ({child!r}, {parent!r}) references unknown concept {endpoint!r}"
                    )
            if (child, parent) in edge_set:
                raise TaxonomyValidationError(f"duplicate edge: ({child!r}, {parent!r})")
            edge_set.add((child, parent))
            parents[child].append(parent)
        self._edges = frozenset(edge_set)
        self._parents = {c: tuple(sorted(ps)) for c, ps in parents.items()}
        self._ancestors = self._close(parents)

    def _close(self, parents: dict[str, list[str]]) -> dict[str, frozenset[str]]:
        """Compute every concept's proper ancestor set; rejects cycles."""
        ancestors: dict[str, frozenset[str]] = {}
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {c: WHITE for c in parents}

        def visit(node: str, stack: list[str]) -> frozenset[str]:
            if color[node] == BLACK:
                return ancestors[node]
            if color[node] == GRAY:
                start = stack.index(node)
                cycle = " -> ".join(stack[start:] + [node])
                raise TaxonomyValidationError(f"cycle detected: {cycle}")
            color[node] = GRAY
            stack.append(node)
            acc: set[str] = set()
            for p in parents[node]:
                acc.add(p)
                acc |= visit(p, stack)
            stack.pop()
            color[node] = BLACK
            ancestors[node] = frozenset(acc)
            return ancestors[node]

        for c in parents:
            visit(c, [])
        return ancestors

    @property
    def concepts(self) -> frozenset[str]:
        return self._concepts

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def parents_of(self, concept: str) -> tuple[str, ...]:
        return self._parents[self._check(concept)]

    def _check(self, concept: str) -> str:
        c = normalize_concept(concept)
        if c not in self._concepts:
            raise UnknownConceptError(f"unknown concept: {c!r}")
        return c

    def is_subclass_of(self, x: str, y: str) -> bool:
        """True iff x == y or a directed child->parent path leads from x to y."""
        xn = self._check(x)
        yn = self._check(y)
        return xn == yn or yn in self._ancestors[xn]

    def match(self, requested: str, advertised: str) -> MatchDegree:
        """Compare a requested concept with an advertised one.

        EXACT if equal; SUBSUME if requested is a subclass of advertised;
        PLUGIN if advertised is a subclass of requested; FAIL otherwise.
        """
        r = self._check(requested)
        a = self._check(advertised)
        if r == a:
            return MatchDegree.EXACT
        if a in self._ancestors[r]:
            return MatchDegree.SUBSUME
        if r in self._ancestors[a]:
            return MatchDegree.PLUGIN
        return MatchDegree.FAIL

    def __len__(self) -> int:
        return len(self._concepts)

    def __contains__(self, concept: str) -> bool:
        try:
            return normalize_concept(concept) in self._concepts
        except TaxonomyError:
            return False


def load_taxonomy(document: str | dict) -> Taxonomy:
    """Build a Taxonomy from a JSON string or an already-parsed dict.

    Expected shape: {"concepts": ["name", ...], "edges": [["child", "parent"], ...]}.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TaxonomyParseError(f"invalid JSON: {exc}") from exc
    else:
        data = document
    if not isinstance(data, dict):
        raise TaxonomyParseError("taxonomy document must be a JSON object")
    concepts = data.get("concepts", [])
    edges = data.get("edges", [])
    if not isinstance(concepts, list):
        raise TaxonomyParseError('"concepts" must be a list of names')
    if not isinstance(edges, list):
        raise TaxonomyParseError('"edges" must be a list of [child, parent] pairs')
    pairs: list[tuple[str, str]] = []
    for e in edges:
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise TaxonomyParseError(f"edge must be a [child, parent] pair, got {e!r}")
        pairs.append((e[0], e[1]))
    return Taxonomy(concepts, pairs)


def load_taxonomy_file(path: str) -> Taxonomy:
    with open(path, "r", encoding="utf-8") as f:
        return load_taxonomy(f.read())

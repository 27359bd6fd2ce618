"""Taxonomy loading, validation and subsumption queries."""

import itertools
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutualaid.taxonomy import (
    MatchDegree,
    Taxonomy,
    TaxonomyParseError,
    TaxonomyValidationError,
    UnknownConceptError,
    load_taxonomy,
    normalize_concept,
)


def brute_force_reachable(concepts, edges, x, y):
    """Oracle: exhaustive DFS over all simple child->parent paths."""
    if x == y:
        return True
    out = {c: [] for c in concepts}
    for child, parent in edges:
        out[child].append(parent)

    def dfs(node, visited):
        if node == y:
            return True
        for nxt in out[node]:
            if nxt not in visited and dfs(nxt, visited | {nxt}):
                return True
        return False

    return dfs(x, {x})


def random_dag(draw):
    """Random DAG of <= 20 concepts; edges only point to earlier names."""
    k = draw(st.integers(min_value=1, max_value=20))
    concepts = [f"c{i}" for i in range(k)]
    edges = []
    for i in range(1, k):
        parents = draw(st.sets(st.integers(min_value=0, max_value=i - 1), max_size=3))
        for p in parents:
            edges.append((concepts[i], concepts[p]))
    return concepts, edges


dags = st.composite(random_dag)()


class TestLoading:
    def test_single_edge_document(self):
        t = load_taxonomy(json.dumps({
            "concepts": ["entertainment", "indoor_service"],
            "edges": [["indoor_service", "entertainment"]],
        }))
        assert len(t) == 2
        assert len(t.edges) == 1

    def test_empty_document(self):
        t = load_taxonomy({"concepts": [], "edges": []})
        assert len(t) == 0
        assert len(t.edges) == 0

    def test_two_cycle_rejected(self):
        with pytest.raises(TaxonomyValidationError, match="cycle"):
            load_taxonomy({"concepts": ["a", "b"], "edges": [["a", "b"], ["b", "a"]]})

    def test_self_loop_rejected(self):
        with pytest.raises(TaxonomyValidationError, match="cycle"):
            load_taxonomy({"concepts": ["a"], "edges": [["a", "a"]]})

    def test_dangling_edge_names_offender(self):
        with pytest.raises(TaxonomyValidationError, match="ghost"):
            load_taxonomy({"concepts": ["a"], "edges": [["a", "ghost"]]})

    def test_duplicate_concept_rejected(self):
        with pytest.raises(TaxonomyValidationError, match="duplicate concept"):
            load_taxonomy({"concepts": ["a", "A "], "edges": []})

    def test_duplicate_edge_rejected(self):
        with pytest.raises(TaxonomyValidationError, match="duplicate edge"):
            load_taxonomy({"concepts": ["a", "b"], "edges": [["a", "b"], ["A", "B"]]})

    def test_malformed_json(self):
        with pytest.raises(TaxonomyParseError):
            load_taxonomy("{not json")

    def test_names_normalized(self):
        t = load_taxonomy({"concepts": ["  Entertainment "], "edges": []})
        assert "entertainment" in t
        assert "ENTERTAINMENT" in t

    def test_empty_name_rejected(self):
        with pytest.raises(TaxonomyValidationError):
            normalize_concept("   ")


class TestSubsumption:
    def test_direct_subclass(self, aal_taxonomy):
        assert aal_taxonomy.is_subclass_of("indoor_service", "entertainment")

    def test_reflexive(self, aal_taxonomy):
        assert aal_taxonomy.is_subclass_of("entertainment", "entertainment")

    def test_transitive_chain(self, aal_taxonomy):
        assert aal_taxonomy.is_subclass_of("walking", "entertainment")

    def test_not_reverse(self, aal_taxonomy):
        assert not aal_taxonomy.is_subclass_of("entertainment", "indoor_service")

    def test_unknown_concept(self, aal_taxonomy):
        with pytest.raises(UnknownConceptError):
            aal_taxonomy.is_subclass_of("entertainment", "nonexistent")

    @settings(max_examples=100, deadline=None)
    @given(dags)
    def test_agrees_with_path_oracle(self, dag):
        concepts, edges = dag
        t = Taxonomy(concepts, edges)
        for x, y in itertools.product(concepts, repeat=2):
            assert t.is_subclass_of(x, y) == brute_force_reachable(concepts, edges, x, y)

    @settings(max_examples=50, deadline=None)
    @given(dags)
    def test_transitivity(self, dag):
        concepts, edges = dag
        t = Taxonomy(concepts, edges)
        for a, b, c in itertools.product(concepts, repeat=3):
            if t.is_subclass_of(a, b) and t.is_subclass_of(b, c):
                assert t.is_subclass_of(a, c)


class TestMatchConcepts:
    def test_subsume(self, aal_taxonomy):
        assert aal_taxonomy.match("indoor_service", "entertainment") is MatchDegree.SUBSUME

    def test_exact(self, aal_taxonomy):
        assert aal_taxonomy.match("informal_provider", "informal_provider") is MatchDegree.EXACT

    def test_plugin(self, aal_taxonomy):
        assert aal_taxonomy.match("entertainment", "indoor_service") is MatchDegree.PLUGIN

    def test_fail(self, aal_taxonomy):
        assert aal_taxonomy.match("medical_care", "entertainment") is MatchDegree.FAIL

    def test_degree_ordering(self):
        assert MatchDegree.EXACT > MatchDegree.SUBSUME > MatchDegree.PLUGIN > MatchDegree.FAIL

    @settings(max_examples=50, deadline=None)
    @given(dags)
    def test_exact_iff_equal_and_antisymmetry(self, dag):
        concepts, edges = dag
        t = Taxonomy(concepts, edges)
        for a, b in itertools.product(concepts, repeat=2):
            d = t.match(a, b)
            assert (d is MatchDegree.EXACT) == (a == b)
            if a != b:
                assert (d is MatchDegree.SUBSUME) == (t.match(b, a) is MatchDegree.PLUGIN)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipdsaw.paths import (
    AuxWalk,
    PolymerPath,
    decompose_beads,
    decompose_patterns,
    enumerate_partition,
    enumerate_paths,
    from_aux_walk,
    geometry,
    hamiltonian,
    hamiltonian_bond_form,
    path_from_line,
    path_to_line,
    to_aux_walk,
    wedge,
)

stretch_lists = st.lists(st.integers(min_value=-6, max_value=6), min_size=1, max_size=10)


def mk(*stretches):
    return PolymerPath.from_stretches(stretches)


class TestWedge:
    @pytest.mark.parametrize(
        "x,y,want",
        [(2, -3, 2), (2, 3, 0), (0, 5, 0), (-4, 4, 4), (-1, -1, 0), (5, 0, 0)],
    )
    def test_values(self, x, y, want):
        assert wedge(x, y) == want

    @given(st.integers(-50, 50), st.integers(-50, 50))
    def test_half_sum_identity(self, x, y):
        assert 2 * wedge(x, y) == abs(x) + abs(y) - abs(x + y)


class TestHamiltonian:
    def test_single_wedge(self):
        assert hamiltonian(mk(2, -3), 1.7) == pytest.approx(2 * 1.7)

    def test_zero_between_opposite(self):
        assert hamiltonian(mk(1, 0, -1), 3.0) == 0.0

    def test_multi_wedge(self):
        # wedges: (3,-2)->2, (-2,2)->2, (2,-1)->1
        assert hamiltonian(mk(3, -2, 2, -1), 2.0) == pytest.approx(2.0 * 5)

    @given(stretch_lists, st.floats(0.1, 4.0))
    @settings(max_examples=200)
    def test_bond_form_equivalent(self, stretches, beta):
        p = PolymerPath.from_stretches(stretches)
        assert hamiltonian(p, beta) == pytest.approx(hamiltonian_bond_form(p, beta), abs=1e-9)


class TestInvariants:
    def test_length_invariant_enforced(self):
        with pytest.raises(ValueError):
            PolymerPath((2, -3), 4)

    @given(stretch_lists)
    def test_from_stretches_consistent(self, stretches):
        p = PolymerPath.from_stretches(stretches)
        assert sum(abs(s) for s in p.stretches) + len(p.stretches) == p.total_length


class TestAuxWalk:
    def test_alternating_sign_transform(self):
        # odd indices keep their sign, even indices flip:
        # l_1=2 -> V_1=2, l_2=-3 -> V_2=3, l_4=-4 -> V_4=4
        p = mk(2, -3, 1, -4)
        w = to_aux_walk(p)
        assert w.values[0] == 0
        assert w.values[1] == 2
        assert w.values[2] == 3
        assert w.values[4] == 4
        assert w.values[-1] == 0

    def test_all_zero(self):
        w = to_aux_walk(mk(0, 0, 0))
        assert set(w.values) == {0}

    def test_geo_area_is_monomer_count(self):
        p = mk(2, -3, 1)
        assert to_aux_walk(p).geo_area == p.total_length - p.horizontal_extension

    def test_rejects_bad_start(self):
        with pytest.raises(ValueError):
            AuxWalk((1, 0))

    def test_rejects_open_walk(self):
        with pytest.raises(ValueError):
            from_aux_walk(AuxWalk((0, 2, 3)), 1)

    @pytest.mark.parametrize("L", range(1, 9))
    def test_round_trip_exhaustive(self, L):
        for p in enumerate_paths(L):
            w = to_aux_walk(p)
            assert from_aux_walk(w, p.horizontal_extension) == p
            assert w.geo_area == L - p.horizontal_extension


class TestGeometry:
    def test_two_stretches(self):
        g = geometry(mk(2, -3))
        assert g.upper == (0, 2, 2, -1)
        assert g.lower == (0, 0, -1, -1)
        assert g.middle == (0.0, 1.0, 0.5, -1.0)

    def test_single_stretch(self):
        g = geometry(mk(4))
        assert g.upper == (0, 4, 4)
        assert g.lower == (0, 0, 4)

    @given(stretch_lists)
    @settings(max_examples=300)
    def test_envelope_characterization(self, stretches):
        # upper = middle + profile/2 and lower = middle - profile/2, exactly
        p = PolymerPath.from_stretches(stretches)
        g = geometry(p)
        for up, lo, m2, pr in zip(g.upper, g.lower, g.middle_x2, g.profile):
            assert 2 * up == m2 + pr
            assert 2 * lo == m2 - pr
            assert up >= lo

    @given(stretch_lists)
    def test_terminal_height(self, stretches):
        p = PolymerPath.from_stretches(stretches)
        g = geometry(p)
        assert g.upper[-1] == g.lower[-1] == sum(stretches)


class TestPatterns:
    def test_two_patterns(self):
        d = decompose_patterns(mk(1, 0, -2, 0))
        assert not d.trailing_remainder
        assert [(p.length, p.extension, p.displacement) for p in d.patterns] == [
            (3, 2, 1),
            (4, 2, -2),
        ]

    def test_all_zero_stretches(self):
        d = decompose_patterns(mk(0, 0, 0))
        assert [(p.length, p.extension, p.displacement) for p in d.patterns] == [(1, 1, 0)] * 3

    def test_trailing_remainder(self):
        d = decompose_patterns(mk(1, 0, 5))
        assert d.trailing_remainder
        assert d.remainder.length == 6
        assert len(d.patterns) == 1

    @given(stretch_lists)
    @settings(max_examples=300)
    def test_lengths_partition_total(self, stretches):
        p = PolymerPath.from_stretches(stretches)
        d = decompose_patterns(p)
        total = sum(q.length for q in d.patterns)
        if d.trailing_remainder:
            total += d.remainder.length
        assert total == p.total_length

    @given(stretch_lists, st.floats(0.2, 3.0))
    @settings(max_examples=300)
    def test_hamiltonian_additivity(self, stretches, beta):
        # zero stretches decouple the energy: H(path) = sum_k H(pattern_k)
        p = PolymerPath.from_stretches(stretches)
        pieces = []
        start = 0
        for j, s in enumerate(p.stretches, start=1):
            if s == 0:
                pieces.append(p.stretches[start:j])
                start = j
        if start < len(p.stretches):
            pieces.append(p.stretches[start:])
        total = sum(hamiltonian(PolymerPath.from_stretches(seg), beta) for seg in pieces)
        assert hamiltonian(p, beta) == pytest.approx(total, abs=1e-10)


class TestBeads:
    @pytest.mark.parametrize(
        "stretches,want",
        [
            ((2, -3, 4, -1), [(0, 4)]),
            ((2, 3), [(0, 1), (1, 2)]),
            ((2, -1, 0, 4), [(0, 2), (3, 4)]),
            ((0, 0), []),
            ((5,), [(0, 1)]),
        ],
    )
    def test_examples(self, stretches, want):
        assert decompose_beads(mk(*stretches)) == want

    @given(stretch_lists)
    def test_beads_cover_all_nonzero(self, stretches):
        p = PolymerPath.from_stretches(stretches)
        covered = set()
        for a, b in decompose_beads(p):
            seg = p.stretches[a:b]
            assert all(s != 0 for s in seg)
            for i in range(1, len(seg)):
                assert seg[i - 1] * seg[i] < 0
            covered.update(range(a, b))
        assert covered == {i for i, s in enumerate(p.stretches) if s != 0}


class TestEnumeration:
    def test_L1(self):
        z, configs = enumerate_partition(1, 1.3)
        assert z == 1.0
        assert [c[0].stretches for c in configs] == [(0,)]

    @pytest.mark.parametrize("beta", [0.3, 1.0, 2.5])
    def test_L2(self, beta):
        z, _ = enumerate_partition(2, beta)
        assert z == pytest.approx(3.0)

    @pytest.mark.parametrize("beta", [0.5, 2.0])
    def test_L4(self, beta):
        z, _ = enumerate_partition(4, beta)
        assert z == pytest.approx(15 + 2 * math.exp(beta))

    def test_guard(self):
        with pytest.raises(ValueError):
            list(enumerate_paths(15))

    def test_counts_follow_pell_recursion(self):
        # |Omega_L| satisfies a_L = 2 a_{L-1} + a_{L-2}
        counts = [sum(1 for _ in enumerate_paths(L)) for L in range(1, 8)]
        for i in range(2, len(counts)):
            assert counts[i] == 2 * counts[i - 1] + counts[i - 2]


class TestSerialization:
    @given(stretch_lists)
    def test_round_trip(self, stretches):
        p = PolymerPath.from_stretches(stretches)
        assert path_from_line(path_to_line(p)) == p

    def test_rejects_non_integers(self):
        with pytest.raises(ValueError):
            path_from_line("[1, 2.5]")

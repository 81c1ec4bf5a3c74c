import pytest
from hypothesis import given, strategies as st

from fpplab.lattice import (
    BoxLattice,
    LatticePath,
    box_around,
    floor_map,
    l1_norm,
    slab_crossings,
    validate_path,
)


@pytest.mark.parametrize("x, want", [
    ((2.0, 3.0), (2, 3)),
    ((1.7, -0.3), (1, -1)),
    ((0.999, 0.0), (0, 0)),
])
def test_floor_map(x, want):
    assert floor_map(x) == want


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=4))
def test_floor_map_half_open_cell(x):
    z = floor_map(x)
    assert all(zi <= xi < zi + 1 for zi, xi in zip(z, x))


@pytest.mark.parametrize("x, want", [
    ((0, 0), 0),
    ((3, -4), 7),
    ((1, 1, 1), 3),
])
def test_l1_norm(x, want):
    assert l1_norm(x) == want


def test_validate_path_flags():
    f = validate_path([(0, 0), (1, 0), (1, 1)])
    assert (f.adjacent, f.self_avoiding, f.directed) == (True, True, True)
    f = validate_path([(0, 0), (1, 0), (0, 0)])
    assert (f.adjacent, f.self_avoiding, f.directed) == (True, False, False)
    f = validate_path([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert (f.adjacent, f.self_avoiding, f.directed) == (True, True, False)


def test_validate_path_rejects_bad_steps():
    with pytest.raises(ValueError):
        validate_path([(0, 0), (1, 1)])
    with pytest.raises(ValueError):
        validate_path([(0, 0), (0, 0)])
    with pytest.raises(ValueError):
        validate_path([])


def test_lattice_path_edges_and_flags():
    p = LatticePath(((0, 0), (1, 0), (1, 1)))
    assert p.edge_count == 2
    assert p.is_self_avoiding and p.is_directed
    assert p.edges() == [((0, 0), 0), ((1, 0), 1)]
    back = LatticePath(((1, 1), (1, 0)))
    assert back.edges() == [((1, 0), 1)]  # canonical lower endpoint
    assert not back.is_directed


def test_slab_crossings_examples():
    straight = LatticePath(tuple((x, 0) for x in range(4)))
    assert slab_crossings(straight, axis=1, level=0) == 0
    detour = LatticePath(((0, 0), (0, 1), (1, 1), (2, 1), (3, 1), (3, 0)))  # window length 3
    assert slab_crossings(detour, axis=1, level=0) == 2
    up = LatticePath(((0, 0), (0, 1), (0, 2)))
    assert slab_crossings(up, axis=1, level=1) == 1


def _random_walk(draw_steps, start=(0, 0)):
    verts = [start]
    for j, sign in draw_steps:
        prev = verts[-1]
        verts.append(tuple(c + (sign if k == j else 0) for k, c in enumerate(prev)))
    return LatticePath(tuple(verts))


walk_steps = st.lists(st.tuples(st.integers(0, 1), st.sampled_from([-1, 1])), min_size=1, max_size=30)


@given(walk_steps)
def test_edge_count_at_least_displacement(steps):
    p = _random_walk(steps)
    disp = tuple(e - s for s, e in zip(p.start, p.end))
    assert p.edge_count >= l1_norm(disp)


@given(walk_steps)
def test_slab_crossings_parity(steps):
    # crossings of axis-1 slabs summed over levels match the displacement parity
    p = _random_walk(steps)
    levels = range(min(v[1] for v in p.vertices) - 1, max(v[1] for v in p.vertices) + 1)
    total = sum(slab_crossings(p, axis=1, level=l) for l in levels)
    assert total % 2 == abs(p.end[1] - p.start[1]) % 2
    assert total >= abs(p.end[1] - p.start[1])


def test_box_indexing_roundtrip():
    lat = BoxLattice((-2, 0, 1), (1, 3, 2))
    assert lat.d == 3
    assert lat.n_vertices == 4 * 4 * 2
    for i in range(lat.n_vertices):
        assert lat.vertex_index(lat.vertex_coord(i)) == i
    with pytest.raises(ValueError):
        lat.vertex_index((5, 0, 1))


def test_box_edge_structure():
    lat = BoxLattice((0, 0), (2, 3))  # 3 x 4 vertices
    n_edges = int(lat.edge_exists.sum())
    assert n_edges == 3 * 3 + 2 * 4  # vertical runs x columns + horizontal runs x rows
    tails, heads, slots = lat.edge_arrays
    assert len(slots) == n_edges
    for t, h, s in zip(tails[:10], heads[:10], slots[:10]):
        a, b = lat.edge_endpoints(int(s))
        assert lat.vertex_index(a) == t and lat.vertex_index(b) == h
        assert l1_norm(tuple(x - y for x, y in zip(a, b))) == 1


def test_vertex_order_is_lexicographic():
    lat = BoxLattice((-1, -1), (1, 1))
    coords = [lat.vertex_coord(i) for i in range(lat.n_vertices)]
    assert coords == sorted(coords)


def test_neighbors_and_boundary():
    lat = BoxLattice((0, 0), (2, 2))
    nbs = list(lat.neighbors((1, 1)))
    assert len(nbs) == 4
    assert not lat.on_boundary((1, 1))
    assert lat.on_boundary((0, 1))
    corner = list(lat.neighbors((0, 0)))
    assert len(corner) == 2


def test_box_validation():
    with pytest.raises(ValueError):
        BoxLattice((0,), (1,))  # d >= 2
    with pytest.raises(ValueError):
        BoxLattice((1, 0), (0, 5))  # lo <= hi


def test_box_around():
    lat = box_around((10, -4), margin=3)
    assert lat.lo == (-3, -7) and lat.hi == (13, 3)
    assert lat.contains((0, 0)) and lat.contains((10, -4))

import numpy as np
import pytest

from src.graph.affinity import (
    affinity_from_weights, build_affinity, save_triplets, select_boundary_labels,
)
from src.imaging.color import rgb_to_lab
from src.imaging.image_io import LabRaster
from src.segmentation.adjacency import boundary_nodes, compute_adjacency
from src.segmentation.superpixel import SuperpixelMap, slic_segment

GRAY = (50.0, 0.0, 0.0)
RED = (53.2, 80.1, 67.2)


def _colored_grid(colors, rows: int, cols: int, cell: int = 2) -> SuperpixelMap:
    ys, xs = np.indices((rows * cell, cols * cell))
    labels = (ys // cell) * cols + xs // cell
    lab = np.asarray(colors, dtype=np.float64)[labels]
    return compute_adjacency(SuperpixelMap.from_labels(labels, LabRaster(lab)))


def test_diagonal_zero_and_identical_colors_weigh_one():
    sp_map = _colored_grid([GRAY] * 3, 1, 3)
    graph = build_affinity(sp_map, boundary_nodes(sp_map))
    W = graph.W.toarray()
    np.testing.assert_array_equal(np.diag(W), 0.0)
    assert W[0, 1] == pytest.approx(1.0)
    assert W[0, 2] == pytest.approx(1.0)


def test_weights_decay_with_color_distance():
    sp_map = _colored_grid([GRAY, RED], 1, 2)
    graph = build_affinity(sp_map, boundary_nodes(sp_map), sigma_c2=0.1)
    dist = np.linalg.norm(sp_map.mean_unit[0] - sp_map.mean_unit[1])
    assert graph.W[0, 1] == pytest.approx(np.exp(-dist / 0.1))
    assert graph.W[0, 1] == pytest.approx(graph.W[1, 0])


def test_two_node_row_normalization():
    graph = affinity_from_weights([[0, 0.5], [0.5, 0]])
    np.testing.assert_allclose(graph.A.toarray(), [[0, 1], [1, 0]])


def test_rows_are_stochastic(blob_fixture):
    sp_map = compute_adjacency(slic_segment(rgb_to_lab(blob_fixture.image), 60))
    graph = build_affinity(sp_map, boundary_nodes(sp_map))
    np.testing.assert_allclose(np.asarray(graph.A.sum(axis=1)).ravel(), 1.0)
    assert (graph.W != graph.W.T).nnz == 0


def test_neighborhood_masks_sparsity():
    sp_map = _colored_grid([GRAY] * 6, 1, 6)
    boundary = boundary_nodes(sp_map)
    two = build_affinity(sp_map, boundary, geodesic=False).W
    one = build_affinity(sp_map, boundary, neighborhood='one_layer', geodesic=False).W
    full = build_affinity(sp_map, boundary, neighborhood='full', geodesic=False).W
    assert two[0, 2] > 0 and two[0, 3] == 0
    assert one[0, 1] > 0 and one[0, 2] == 0
    assert full.nnz == 6 * 5


def test_geodesic_links_boundary_pairs():
    sp_map = _colored_grid([GRAY] * 9, 3, 3)
    boundary = boundary_nodes(sp_map)
    assert build_affinity(sp_map, boundary, geodesic=False).W[0, 8] == 0
    assert build_affinity(sp_map, boundary, geodesic=True).W[0, 8] > 0


def test_isolated_node_gets_self_loop():
    graph = affinity_from_weights([[0, 0, 0], [0, 0, 1], [0, 1, 0]])
    A = graph.A.toarray()
    assert A[0, 0] == 1.0
    np.testing.assert_allclose(A.sum(axis=1), 1.0)


@pytest.mark.parametrize('kwargs', [{'sigma_c2': 0.0}, {'neighborhood': 'three_layer'}])
def test_build_affinity_rejects_bad_parameters(kwargs):
    sp_map = _colored_grid([GRAY] * 3, 1, 3)
    with pytest.raises(ValueError):
        build_affinity(sp_map, boundary_nodes(sp_map), **kwargs)


def test_build_affinity_requires_adjacency():
    labels = np.array([[0, 1]])
    sp_map = SuperpixelMap.from_labels(labels, LabRaster(np.zeros((1, 2, 3))))
    with pytest.raises(ValueError, match='邻接'):
        build_affinity(sp_map, boundary_nodes(sp_map))


def test_drop_thirty_percent_of_ten():
    colors = [(float(10 * i), 0.0, 0.0) for i in range(10)]
    sp_map = _colored_grid(colors, 1, 10)
    kept = select_boundary_labels(boundary_nodes(sp_map), sp_map, drop_frac=0.3)
    assert len(kept) == 7


def test_ties_dropped_by_ascending_id():
    sp_map = _colored_grid([GRAY] * 10, 1, 10)
    kept = select_boundary_labels(boundary_nodes(sp_map), sp_map, drop_frac=0.3)
    assert kept == tuple(range(3, 10))


def test_distinct_red_node_dropped():
    colors = [GRAY] * 10
    colors[6] = RED
    sp_map = _colored_grid(colors, 1, 10)
    kept = select_boundary_labels(boundary_nodes(sp_map), sp_map, drop_frac=0.3)
    assert 6 not in kept
    assert len(kept) == 7


def test_select_boundary_labels_errors():
    sp_map = _colored_grid([GRAY] * 4, 1, 4)
    boundary = boundary_nodes(sp_map)
    with pytest.raises(ValueError):
        select_boundary_labels(boundary, sp_map, drop_frac=1.0)
    single = _colored_grid([GRAY], 1, 1)
    with pytest.raises(ValueError, match='边界节点数'):
        select_boundary_labels(boundary_nodes(single), single)


def test_save_triplets_sorted(tmp_path):
    graph = affinity_from_weights([[0, 0.25, 0], [0.25, 0, 1.0], [0, 1.0, 0]])
    path = save_triplets(graph.W, str(tmp_path / 'W.txt'))
    lines = open(path, encoding='utf-8').read().splitlines()
    assert lines == ['0 1 0.25', '1 0 0.25', '1 2 1.0', '2 1 1.0']

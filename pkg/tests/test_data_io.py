import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ggad.data_io import (
    Split,
    _triangle_pairs,
    build_split,
    load_dataset,
    save_dataset,
    sbm_edges,
    synth_generate,
)
from ggad.errors import CountMismatch, InsufficientNodes, InvalidParams, MissingFile, ParseError
from ggad.graph import build_graph
from ggad.linalg import make_rng
from ggad.metrics import auroc

from conftest import random_graph


@pytest.fixture(scope="module")
def default_synth():
    return synth_generate(rng=make_rng(0))


# -- directories ---------------------------------------------------------------------

def test_round_trip_exact(tmp_path):
    g = random_graph(4, n=40, labels=True)
    g = build_graph(g.edge_array(), g.features * 1e-7 + 1 / 3, g.labels, name="rt")
    save_dataset(g, tmp_path / "d")
    back = load_dataset(tmp_path / "d")
    assert back.same_as(g)
    assert np.array_equal(back.features, g.features)
    assert back.name == "rt"


def test_files_are_lf_utf8(tmp_path):
    save_dataset(random_graph(0, labels=True), tmp_path)
    for name in ("meta.json", "edges.tsv", "features.csv", "labels.csv"):
        raw = (tmp_path / name).read_bytes()
        assert b"\r" not in raw
        raw.decode("utf-8")
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["num_nodes"] == 20 and meta["num_features"] == 8


def test_one_direction_edges_accepted(tmp_path):
    save_dataset(build_graph([(0, 1), (1, 2)], np.zeros((3, 1)), [0, 0, 1]), tmp_path)
    (tmp_path / "edges.tsv").write_text("1\t0\n2\t1\n1\t2\n")
    g = load_dataset(tmp_path)
    assert g.num_edges == 2 and g.neighbors(1).tolist() == [0, 2]


def test_missing_file(tmp_path):
    save_dataset(random_graph(0, labels=True), tmp_path)
    (tmp_path / "labels.csv").unlink()
    with pytest.raises(MissingFile):
        load_dataset(tmp_path)


def test_malformed_edge_line_reports_line(tmp_path):
    save_dataset(random_graph(0, labels=True), tmp_path)
    (tmp_path / "edges.tsv").write_text("0\t1\n1\t2\n3 4\n")
    with pytest.raises(ParseError) as info:
        load_dataset(tmp_path)
    assert info.value.line == 3
    (tmp_path / "edges.tsv").write_text("0\t1\n1\tx\n")
    with pytest.raises(ParseError) as info:
        load_dataset(tmp_path)
    assert info.value.line == 2


def test_edge_endpoint_out_of_range(tmp_path):
    save_dataset(random_graph(0, labels=True), tmp_path)
    (tmp_path / "edges.tsv").write_text("0\t20\n")
    with pytest.raises(ParseError):
        load_dataset(tmp_path)


def test_row_count_mismatch(tmp_path):
    g = synth_generate(n_nodes=100, rng=make_rng(1))
    save_dataset(g, tmp_path)
    lines = (tmp_path / "features.csv").read_text().splitlines()
    (tmp_path / "features.csv").write_text("\n".join(lines[:99]) + "\n")
    with pytest.raises(CountMismatch):
        load_dataset(tmp_path)


def test_column_count_mismatch(tmp_path):
    save_dataset(random_graph(0, labels=True), tmp_path)
    meta = json.loads((tmp_path / "meta.json").read_text())
    meta["num_features"] = 9
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    with pytest.raises(CountMismatch):
        load_dataset(tmp_path)


def test_labels_header_tolerated_and_values_checked(tmp_path):
    save_dataset(build_graph([(0, 1)], np.zeros((2, 1)), [0, 1]), tmp_path)
    (tmp_path / "labels.csv").write_text("node_id,label\n0,0\n1,1\n")
    assert load_dataset(tmp_path).labels.tolist() == [0, 1]
    (tmp_path / "labels.csv").write_text("0,0\n1,2\n")
    with pytest.raises(ParseError):
        load_dataset(tmp_path)
    (tmp_path / "labels.csv").write_text("0,0\n")
    with pytest.raises(CountMismatch):
        load_dataset(tmp_path)


# -- synthetic benchmark -------------------------------------------------------------

@pytest.mark.parametrize("n", [5, 9, 50, 101])
def test_triangle_pairs_match_triu(n):
    iu, ju = np.triu_indices(n, 1)
    i, j = _triangle_pairs(np.arange(iu.size), n)
    assert np.array_equal(i, iu) and np.array_equal(j, ju)


def test_default_anomaly_count(default_synth):
    g = default_synth
    assert g.num_nodes == 2000 and g.num_features == 16
    assert int(g.labels.sum()) == 100


def test_zero_p_out_gives_disconnected_blocks():
    g = synth_generate(n_nodes=400, p_out=0.0, anomaly_rate=0.01, rng=make_rng(2))
    block = np.repeat(np.arange(4), 100)
    normal = g.labels == 0
    u, v = g.edge_array().T
    # only clique edges between anomalies may cross blocks
    cross = block[u] != block[v]
    assert (normal[u[cross]] | normal[v[cross]]).sum() == 0


def test_intra_block_density_close_to_p_in():
    rng = make_rng(3)
    sizes = [500] * 4
    e = sbm_edges(rng, sizes, 0.02, 0.002)
    block = np.repeat(np.arange(4), 500)
    intra = (block[e[:, 0]] == block[e[:, 1]]).sum()
    pairs = 4 * 500 * 499 / 2
    sd = np.sqrt(pairs * 0.02 * 0.98)
    assert abs(intra - pairs * 0.02) < 3 * sd
    inter_pairs = 6 * 500 * 500
    assert abs((len(e) - intra) - inter_pairs * 0.002) < 3 * np.sqrt(inter_pairs * 0.002)


def test_synth_deterministic():
    a = synth_generate(n_nodes=300, rng=make_rng(5))
    b = synth_generate(n_nodes=300, rng=make_rng(5))
    assert a.same_as(b) and np.array_equal(a.features, b.features)


def test_synth_invalid_params():
    for kw in (dict(p_in=0.01, p_out=0.02), dict(anomaly_rate=0.0), dict(anomaly_rate=0.5),
               dict(n_blocks=1), dict(p_out=-0.1)):
        with pytest.raises(InvalidParams):
            synth_generate(n_nodes=100, rng=make_rng(0), **kw)


def heuristic_scores(g):
    """Degree deviation plus distance of a node's features from its neighbours' mean."""
    deg = g.degrees.astype(float)
    a = g.adjacency_matrix()
    nb_mean = np.asarray(a @ g.features) / np.maximum(deg, 1)[:, None]
    dist = np.linalg.norm(g.features - nb_mean, axis=1)
    z = lambda x: (x - x.mean()) / (x.std() + 1e-12)  # noqa: E731
    return z(np.abs(deg - np.median(deg))) + z(dist)


def test_benchmark_detectable_by_heuristic(default_synth):
    g = default_synth
    assert auroc(heuristic_scores(g), g.labels) > 0.6


# -- splits ----------------------------------------------------------------------------

def labeled_graph(n_normal, n_anom):
    y = np.r_[np.zeros(n_normal, int), np.ones(n_anom, int)]
    return build_graph(np.zeros((0, 2), int), np.zeros((y.size, 1)), y)


def test_split_counts():
    g = labeled_graph(1000, 50)
    s = build_split(g, 15, 0.0, rng=make_rng(0))
    assert s.labeled_normals.size == 150
    assert (g.labels[s.labeled_normals] == 0).all()


def test_split_contamination_count():
    g = labeled_graph(1000, 50)
    s = build_split(g, 20, 0.05, rng=make_rng(0))
    assert s.labeled_normals.size == 200
    assert int(g.labels[s.labeled_normals].sum()) == 10
    assert np.array_equal(s.contaminants, s.labeled_normals[g.labels[s.labeled_normals] == 1])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([10, 15, 20, 25]), st.sampled_from([0.0, 0.02, 0.1]))
def test_split_partitions_nodes(seed, rate, c):
    g = labeled_graph(300, 40)
    s = build_split(g, rate, c, rng=make_rng(seed))
    assert np.intersect1d(s.labeled_normals, s.test_nodes).size == 0
    assert np.array_equal(np.union1d(s.labeled_normals, s.test_nodes), np.arange(340))


def test_split_deterministic_and_seed_sensitive():
    g = labeled_graph(500, 20)
    a = build_split(g, 15, rng=make_rng(1))
    b = build_split(g, 15, rng=make_rng(1))
    c = build_split(g, 15, rng=make_rng(2))
    assert np.array_equal(a.labeled_normals, b.labeled_normals)
    assert not np.array_equal(a.labeled_normals, c.labeled_normals)


def test_split_insufficient():
    with pytest.raises(InsufficientNodes):
        build_split(labeled_graph(100, 1), 50, 0.1, rng=make_rng(0))
    with pytest.raises(InvalidParams):
        build_split(labeled_graph(100, 1), 0, rng=make_rng(0))


def test_split_json_round_trip(tmp_path):
    s = build_split(labeled_graph(100, 10), 20, 0.1, rng=make_rng(3), seed=3)
    s.save(tmp_path / "s.json")
    t = Split.load(tmp_path / "s.json")
    assert np.array_equal(s.labeled_normals, t.labeled_normals)
    assert np.array_equal(s.test_nodes, t.test_nodes)
    assert np.array_equal(s.contaminants, t.contaminants)
    assert (t.train_rate, t.contamination_rate, t.seed) == (20.0, 0.1, 3)

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poladca.graphio import (
    DatasetError,
    PreprocessConfig,
    SignalRecord,
    build_knn_graph,
    generate_synthetic_dataset,
    inject_snr_noise,
    iter_csv_rows,
    load_csv_dataset,
    records_to_samples,
    segment_signal,
    stratified_split,
    validate_graph,
    window_to_sample,
    write_csv_dataset,
    zscore,
)


class TestSegmentation:
    @pytest.mark.parametrize("L, expected", [(2000, [0, 500, 1000]), (1000, [0])])
    def test_window_starts(self, L, expected):
        rec = SignalRecord(np.arange(L, dtype=float)[None], 0)
        wins = segment_signal(rec, 1000, 500)
        assert [int(w[0, 0]) for w in wins] == expected

    def test_window_too_long(self):
        with pytest.raises(ValueError):
            segment_signal(SignalRecord(np.zeros((1, 10)), 0), 11, 1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 400), st.integers(1, 400), st.integers(1, 50))
    def test_count_formula(self, L, w, s):
        if w > L:
            return
        rec = SignalRecord(np.zeros((1, L)), 0)
        assert len(segment_signal(rec, w, s)) == (L - w) // s + 1


class TestZscore:
    def test_two_points(self):
        np.testing.assert_allclose(zscore(np.array([[1.0, 3.0]])), [[-1 / math.sqrt(2), 1 / math.sqrt(2)]])

    def test_constant_channel(self):
        np.testing.assert_array_equal(zscore(np.array([[5.0, 5.0, 5.0]])), [[0, 0, 0]])

    def test_moments_and_idempotence(self, rng):
        w = rng.standard_normal((3, 500)) * [[1], [10], [0.1]] + 4
        z = zscore(w)
        np.testing.assert_allclose(z.mean(axis=1), 0, atol=1e-10)
        np.testing.assert_allclose(z.std(axis=1, ddof=1), 1, atol=1e-10)
        np.testing.assert_allclose(zscore(z), z, atol=1e-10)


class TestKnn:
    def test_collinear(self):
        nb = build_knn_graph(np.array([[0.0], [1.0], [10.0]]), 1)
        assert nb == ((1,), (0, 2), (1,))

    def test_tie_goes_to_lower_index(self):
        # node 1 is equidistant from nodes 0 and 2
        nb = build_knn_graph(np.array([[0.0], [1.0], [2.0]]), 1)
        assert 0 in nb[1]
        assert nb[2] == (1,)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            build_knn_graph(np.zeros((3, 2)), 3)
        with pytest.raises(ValueError):
            build_knn_graph(np.zeros((3, 2)), 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 15), st.integers(1, 4), st.integers(0, 2**31))
    def test_symmetric_and_covering(self, n, D, seed):
        x = np.random.default_rng(seed).standard_normal((n, D))
        k = 1 + seed % (n - 1)
        nb = build_knn_graph(x, k)
        for i, row in enumerate(nb):
            assert i not in row and len(row) >= k
            for j in row:
                assert i in nb[j]

    def test_matches_brute_force(self, rng):
        x = rng.standard_normal((9, 3))
        nb = build_knn_graph(x, 3)
        d = np.array([[np.sqrt(((a - b) ** 2).sum()) for b in x] for a in x])
        for i in range(9):
            order = sorted((d[i, j], j) for j in range(9) if j != i)[:3]
            assert {j for _, j in order} <= set(nb[i])


class TestWindowToSample:
    def test_segments_mode_shape(self):
        cfg = PreprocessConfig(window_len=1000, stride=500, k=8, segment_count=20)
        s = window_to_sample(np.random.default_rng(0).standard_normal((1, 1000)), cfg)
        assert (s.n_nodes, s.n_features) == (20, 50)
        validate_graph(s)

    def test_timesteps_mode_shape(self):
        cfg = PreprocessConfig(window_len=100, stride=50, k=8, node_mode="timesteps")
        s = window_to_sample(np.random.default_rng(0).standard_normal((24, 100)), cfg)
        assert (s.n_nodes, s.n_features) == (100, 24)

    def test_segment_layout(self):
        cfg = PreprocessConfig(window_len=4, stride=4, k=1, segment_count=2, zscore=False)
        w = np.array([[1.0, 2, 3, 4], [5, 6, 7, 8]])
        np.testing.assert_array_equal(window_to_sample(w, cfg).node_features, [[1, 2, 5, 6], [3, 4, 7, 8]])

    def test_invalid_configs(self):
        with pytest.raises(ValueError):
            PreprocessConfig(window_len=1000, segment_count=3)
        with pytest.raises(ValueError):
            PreprocessConfig(window_len=10, segment_count=1, k=1)  # n = 1 < 2

    def test_deterministic(self, rng):
        cfg = PreprocessConfig(window_len=200, stride=100, k=3, segment_count=10)
        w = rng.standard_normal((2, 200))
        a, b = window_to_sample(w, cfg), window_to_sample(w.copy(), cfg)
        np.testing.assert_array_equal(a.node_features, b.node_features)
        assert a.neighbors == b.neighbors


class TestNoise:
    def test_infinite_snr(self, rng):
        w = rng.standard_normal((2, 50))
        np.testing.assert_array_equal(inject_snr_noise(w, math.inf, 0), w)

    @pytest.mark.parametrize("snr", [0.0, -8.0, 6.0])
    def test_noise_power(self, snr):
        w = np.ones((1, 100_000))  # unit power
        noise = inject_snr_noise(w, snr, seed=3) - w
        expected = 10 ** (-snr / 10)
        assert abs(noise.var() / expected - 1) < 0.03

    def test_reproducible(self, rng):
        w = rng.standard_normal((2, 30))
        np.testing.assert_array_equal(inject_snr_noise(w, 0, 5), inject_snr_noise(w, 0, 5))

    def test_zero_power(self):
        with pytest.raises(ValueError):
            inject_snr_noise(np.zeros((1, 5)), 0.0, 0)


class TestSynthetic:
    def test_counts_and_determinism(self):
        a = generate_synthetic_dataset(5, 40, seed=7)
        b = generate_synthetic_dataset(5, 40, seed=7)
        assert len(a) == 200
        assert np.bincount([r.label for r in a]).tolist() == [40] * 5
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.channels, rb.channels)

    def test_spectral_energy_separates_two_classes(self):
        # well-separated base frequencies: class 0 vs class 4
        recs = [r for r in generate_synthetic_dataset(5, 30, seed=2) if r.label in (0, 4)]
        f0, f4 = 0.02, 0.02 + 4 * 0.011

        def band_energy(x, f):
            spec = np.abs(np.fft.rfft(x[0])) ** 2
            freqs = np.fft.rfftfreq(x.shape[1])
            return spec[np.abs(freqs - f) < 0.004].sum()

        feat = np.array([np.log(band_energy(r.channels, f0) / band_energy(r.channels, f4)) for r in recs])
        y = np.array([r.label == 4 for r in recs])
        half = len(recs) // 2
        idx = np.random.default_rng(0).permutation(len(recs))
        tr, te = idx[:half], idx[half:]
        # best threshold on the training half, applied to the held-out half
        cands = np.sort(feat[tr])
        accs = [np.mean((feat[tr] < c) == y[tr]) for c in cands]
        thr = cands[int(np.argmax(accs))]
        assert np.mean((feat[te] < thr) == y[te]) > 0.9

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            generate_synthetic_dataset(1, 3)


class TestCsv:
    def test_round_trip(self, tmp_path):
        recs = generate_synthetic_dataset(2, 2, PreprocessConfig(window_len=40, segment_count=4, k=2), seed=1)
        manifest = write_csv_dataset(recs, tmp_path)
        loaded = load_csv_dataset(manifest)
        for a, b in zip(recs, loaded):
            np.testing.assert_array_equal(a.channels, b.channels)
            assert a.label == b.label

    def test_two_rows(self, tmp_path):
        (tmp_path / "a.csv").write_text("v\n1.5\n2.5\n")
        (tmp_path / "m.json").write_text(json.dumps([{"csv": "a.csv", "label": 0, "channels": ["v"]}]))
        rec = load_csv_dataset(tmp_path / "m.json")[0]
        assert rec.length == 2

    def test_missing_file_named(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps([{"csv": "absent.csv", "label": 0, "channels": ["v"]}]))
        with pytest.raises(DatasetError, match="absent.csv"):
            load_csv_dataset(tmp_path / "m.json")

    def test_bad_cell_location(self, tmp_path):
        (tmp_path / "a.csv").write_text("v,w\n1,2\nabc,3\n")
        (tmp_path / "m.json").write_text(json.dumps([{"csv": "a.csv", "label": 0, "channels": ["v", "w"]}]))
        with pytest.raises(DatasetError, match=r"row 3, column 1"):
            load_csv_dataset(tmp_path / "m.json")

    def test_ragged_row(self, tmp_path):
        (tmp_path / "a.csv").write_text("v,w\n1,2\n3\n")
        (tmp_path / "m.json").write_text(json.dumps([{"csv": "a.csv", "label": 0}]))
        with pytest.raises(DatasetError, match="row 3"):
            load_csv_dataset(tmp_path / "m.json")

    def test_stream_rows(self):
        rows = list(iter_csv_rows(["a,b", "1,2", "3,4"]))
        np.testing.assert_array_equal(rows, [[1, 2], [3, 4]])
        assert list(iter_csv_rows([])) == []


class TestSplit:
    def test_stratified_fractions(self):
        labels = np.repeat(np.arange(5), 40)
        sp = stratified_split(labels, seed=0)
        assert len(sp.test) == 60 and len(sp.train) + len(sp.val) == 140
        assert set(sp.train) | set(sp.val) | set(sp.test) == set(range(200))
        assert not (set(sp.train) & set(sp.test)) and not (set(sp.val) & set(sp.test))
        assert np.bincount(labels[list(sp.test)]).tolist() == [12] * 5

    def test_records_to_samples_noise_seeded(self, small_pre):
        recs = generate_synthetic_dataset(2, 2, small_pre, seed=0)
        a = records_to_samples(recs, small_pre, snr_db=0, noise_seed=4)
        b = records_to_samples(recs, small_pre, snr_db=0, noise_seed=4)
        clean = records_to_samples(recs, small_pre)
        np.testing.assert_array_equal(a[0].node_features, b[0].node_features)
        assert not np.array_equal(a[0].node_features, clean[0].node_features)

"""Smoke test for the pyhubkit extension module.

Run after building the module (see README):

    PYTHONPATH=target/python python3 python/smoke_test.py
"""

import math
import os
import tempfile

import pyhubkit as hk


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    m = hk.Matrix([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
    assert m.shape == (3, 2) and m.dtype == "f64"
    assert hk.euclidean(m.row(0), m.row(1)) == 5.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "m.hubm")
        f32 = hk.Matrix(m.tolist(), dtype="f32")
        f32.write(path)
        back = hk.Matrix.read(path)
        assert back == f32 and back.dtype == "f32"
        try:
            hk.Matrix.read(os.path.join(d, "missing.hubm"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise OSError")

    pts = hk.gaussian_matrix(400, 50, 0)
    r = hk.topk(pts, 10)
    assert len(r.ids) == 400 and all(len(ids) == 10 for ids in r.ids)
    assert sum(r.counts) == 400 * 10
    assert all(i not in ids for i, ids in enumerate(r.ids))
    assert close(r.k_skew(), hk.skewness([float(c) for c in r.counts]))
    hubs = r.hubs(25)
    assert hubs == hk.detect_hubs(r.counts, 25)
    summary = hk.hub_summary(r.counts, 25)
    assert summary["num_hubs"] == len(hubs)

    probs = hk.peaked_softmax_matrix(100, 20, 2.0, 1)
    mean, _, rv = hk.prob_distance_stats(probs)
    assert close(mean, 1.0 - 1.0 / 20, 1e-9)
    assert 0.0 < rv <= 1.0 / 19
    uniform = hk.peaked_softmax_matrix(5, 8, 0.0, 1)
    assert hk.mean_l2_to_uniform(uniform) == 0.0
    one_hot = hk.Matrix([[1.0, 0.0, 0.0, 0.0]])
    assert close(hk.mean_l2_to_uniform(one_hot), math.sqrt(0.75))

    logits = hk.gaussian_matrix(30, 6, 2)
    p = hk.softmax_rows(logits)
    assert all(close(sum(row), 1.0, 1e-9) for row in p.tolist())
    by_prob = hk.topk(p, 3, measure="probability")
    assert [ids[0] for ids in by_prob.ids] == hk.top1_predict(p)

    assert hk.skewness([1.0, 2.0, 3.0]) == 0.0
    assert hk.spearman([1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0]) == -1.0
    assert hk.average_ranks([10.0, 20.0, 10.0]) == [1.5, 3.0, 1.5]
    try:
        hk.spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    except hk.UndefinedStatistic:
        pass
    else:
        raise AssertionError("constant input should be undefined")
    try:
        hk.topk(pts, 400)
    except hk.HubkitError:
        pass
    else:
        raise AssertionError("k equal to n with self excluded should fail")

    dist = hk.pairwise_matrix(hk.gaussian_matrix(300, 100, 3))
    before = hk.topk_precomputed(dist, 10).k_skew()
    after = hk.topk_precomputed(hk.mutual_proximity(dist), 10).k_skew()
    assert after < before, (after, before)
    gcr = hk.global_rank(dist).tolist()
    col = sorted(gcr[x][0] for x in range(1, 300))
    assert col == [float(r) for r in range(1, 300)]

    scan = hk.rv_scan([3, 30], 300, sample_pairs=5000)
    assert [d for d, _, _ in scan] == [3, 30] and scan[0][1] > scan[1][1]
    edges, counts, lo, hi, _ = hk.distance_histogram(pts, bins=10, sample_pairs=2000)
    assert len(edges) == 11 and sum(counts) == 2000 and lo <= hi

    acc = hk.accuracy_partition([0, 1, 1], [0, 1, 2], [1])
    assert acc == (2.0 / 3.0, 0.5, 1.0)
    print("pyhubkit smoke test passed")


if __name__ == "__main__":
    main()

"""Smoke test for the iwpca Python module.

Build and run from the repository root:

    cargo build --release -p iwpca-py --features extension-module
    cp target/release/libiwpca_py.so python/iwpca.so
    python3 python/smoke_test.py
"""

import itertools
import json
import os
import random
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import iwpca  # noqa: E402


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def random_binary(n, d, p, seed):
    rng = random.Random(seed)
    return [[1.0 if rng.random() < p else 0.0 for _ in range(d)] for _ in range(n)]


def main():
    p, report = iwpca.fantope_linmax([[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]], 2)
    assert p.rank == 2 and close(report.objective_value, 5.0)
    assert [round(v, 12) for v in p.diagonal()] == [1.0, 0.0, 1.0]

    _, report = iwpca.fantope_linmax([[1.0, 0.0], [0.0, -1.0]], 2)
    assert report.achieved_rank == 1

    x = random_binary(60, 10, 0.3, 5)
    for r in (1, 3, 10):
        vp = iwpca.vanilla_pca(x, r)
        m = vp.matrix()
        trace = sum(m[i][i] for i in range(10))
        assert close(trace, r, 1e-8), trace
        idem = [[sum(m[i][k] * m[k][j] for k in range(10)) for j in range(10)] for i in range(10)]
        assert all(close(idem[i][j], m[i][j], 1e-8) for i in range(10) for j in range(10))

    w = iwpca.weights_inverse_sign_norm(x)
    counts = [sum(1 for row in x if row[j] != 0) for j in range(10)]
    assert all(close(wj, c ** -0.5) for wj, c in zip(w, counts) if c)

    proj, solve = iwpca.item_weighted_pca(x, 3)
    assert proj.rank == 3 and solve.multiplier == 0.0
    uniform, _ = iwpca.item_weighted_pca(x, 3, weights=[1.0] * 10)
    vanilla = iwpca.vanilla_pca(x, 3)
    assert all(
        close(a, b, 1e-7)
        for ra, rb in zip(uniform.matrix(), vanilla.matrix())
        for a, b in zip(ra, rb)
    )
    _, constrained = iwpca.item_weighted_pca(x, 3, error_slack=0.1)
    assert constrained.achieved_rank <= 3

    assert iwpca.auc([1.0, 3.0, 0.0, 2.0], [True, False, True, False]) == 0.0
    assert iwpca.auc([2.0, 3.0, 0.0, 1.0], [True, False, True, False]) == 0.25
    assert iwpca.auc([1.0, 2.0], [True, True]) is None

    scores = iwpca.zero_diagonal_scores(x, proj)
    flipped = [row[:] for row in x]
    for row in flipped:
        row[4] = 1.0 - row[4]
    scores_flipped = iwpca.zero_diagonal_scores(flipped, proj)
    assert all(close(a[4], b[4], 1e-12) for a, b in zip(scores, scores_flipped))

    ev = iwpca.item_auc(x, proj)
    assert len(ev.per_item_auc) == len(ev.scored_items)
    assert close(ev.mean_auc, sum(ev.per_item_auc) / len(ev.per_item_auc))
    assert json.loads(ev.to_json())["rank"] == 3

    sweep = iwpca.rank_sweep(x, ["vanilla", "colnorm", "iwpca"], [2, 10])
    assert len(sweep) == 6
    full = [s.mean_auc for s in sweep if s.rank == 10]
    assert all(close(a, full[0]) for a in full)

    points = iwpca.robustness_sweep(x, "iwpca", 3, [0.0, 0.5], seed=7)
    again = iwpca.robustness_sweep(x, "iwpca", 3, [0.0, 0.5], seed=7)
    assert [a for a, _ in points] == [0.0, 0.5]
    assert [r.mean_auc for _, r in points] == [r.mean_auc for _, r in again]

    basis = iwpca.Projection([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    assert basis.dim == 3 and basis.rank == 2
    for bad in (lambda: iwpca.Projection([[1.0, 1.0], [0.0, 1.0]]),
                lambda: iwpca.vanilla_pca(x, 11),
                lambda: iwpca.rank_sweep(x, ["nope"], [1])):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    # Independent check of the fantope maximum on a small random matrix.
    rng = random.Random(11)
    a = [[0.0] * 5 for _ in range(5)]
    for i, j in itertools.product(range(5), repeat=2):
        if i <= j:
            a[i][j] = a[j][i] = rng.uniform(-1, 1)
    try:
        import numpy as np
    except ImportError:
        np = None
    if np is not None:
        lam = sorted(np.linalg.eigvalsh(np.array(a)), reverse=True)
        for r in range(1, 6):
            _, rep = iwpca.fantope_linmax(a, r)
            assert close(rep.objective_value, sum(v for v in lam[:r] if v > 0), 1e-8)

    print("python smoke test: ok")


if __name__ == "__main__":
    main()

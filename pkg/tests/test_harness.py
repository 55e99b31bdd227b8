import math
from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mgal.errors import ConfigError
from mgal.graphcore import SbmSpec, grouping_pairs, preset, synth_multiview
from mgal.harness import (
    ExperimentSpec,
    RunResult,
    graph_count_sweep,
    run_experiment,
    run_gcn_m,
    run_gcn_single,
    run_mgal,
    run_mgl,
    run_multi_gcn,
    split_for,
    view_subsets,
)
from mgal.training import TrainConfig, Trainer


@pytest.fixture(scope="module")
def tiny():
    return synth_multiview(preset("tiny", seed=0))


def quick(**kw):
    train = TrainConfig(epochs=kw.pop("epochs", 25), patience=10, **kw.pop("train", {}))
    return ExperimentSpec(runs=kw.pop("runs", 2), train=train, **kw)


def same_params(a, b, keys=None):
    keys = keys if keys is not None else a.keys()
    return all(a[k].tobytes() == b[k].tobytes() for k in keys)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(method="svm")
    with pytest.raises(ConfigError):
        ExperimentSpec(runs=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(method="gcn_single")
    with pytest.raises(ConfigError):
        ExperimentSpec(method="gcn_single", view=3).validate(m=3)
    ExperimentSpec(method="gcn_single", view=2).validate(m=3)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
def test_run_result_summary_matches_recomputation(accs):
    r = RunResult("x", tuple(accs), (1,) * len(accs), tuple(range(len(accs))))
    mean = math.fsum(accs) / len(accs)
    assert abs(r.mean - mean) <= 1e-12
    assert abs(r.std - math.sqrt(sum((a - mean) ** 2 for a in accs) / len(accs))) <= 1e-12
    if len(accs) == 1:
        assert r.std == 0.0


def test_run_seeds_and_shared_splits(tiny):
    spec = quick(base_seed=7, runs=3)
    r = run_mgl(tiny, spec)
    assert r.seeds == (7, 8, 9)
    assert len(r.accuracies) == 3 and len(r.stopped_epochs) == 3
    s0, s1 = split_for(tiny, spec, 0), split_for(tiny, spec, 1)
    assert not np.array_equal(s0.labeled, s1.labeled)


def test_gcn_single_bad_view(tiny):
    with pytest.raises(ConfigError):
        run_gcn_single(tiny, 3, quick())


def test_gcn_single_on_one_view_dataset_equals_mgl(tiny):
    one = tiny.subset_views([1])
    spec = quick()
    a, b = run_gcn_single(tiny, 1, spec), run_mgl(one, spec)
    assert a.accuracies == b.accuracies
    assert all(same_params(p, q) for p, q in zip(a.params, b.params))


def test_gcn_m_identical_views_equals_single(tiny):
    twin = replace(tiny, views=(tiny.views[0], tiny.views[0]))
    spec = quick()
    a, b = run_gcn_m(twin, spec), run_gcn_single(twin, 0, spec)
    assert a.accuracies == b.accuracies
    assert all(same_params(p, q) for p, q in zip(a.params, b.params))


def test_multi_gcn_one_view_equals_single(tiny):
    one = tiny.subset_views([2])
    spec = quick()
    a, b = run_multi_gcn(one, spec), run_gcn_single(one, 0, spec)
    assert a.accuracies == b.accuracies
    assert np.array_equal(a.params[0]["head.W.0"], b.params[0]["head.W"])


@pytest.mark.parametrize("losses,expect", [((0.3, 0.1, 0.5), 1), ((0.2, 0.2, 0.5), 0), ((0.4, 0.3, 0.3), 1)])
def test_multi_gcn_selects_lowest_loss_view(tiny, monkeypatch, losses, expect):
    monkeypatch.setattr(Trainer, "per_view_training_loss", lambda self: list(losses))
    r = run_multi_gcn(tiny, quick(runs=1, epochs=2))
    assert r.reports[0].selected_view == expect


def test_mgal_needs_two_views(tiny):
    with pytest.raises(ConfigError):
        run_mgal(tiny.subset_views([0]), quick())


def test_runs_are_deterministic(tiny):
    spec = quick(base_seed=3)
    a, b = run_mgal(tiny, spec), run_mgal(tiny, spec)
    assert a.accuracies == b.accuracies and a.stopped_epochs == b.stopped_epochs
    assert all(same_params(p, q) for p, q in zip(a.params, b.params))


def test_mgl_equals_mgal_without_adversary(tiny):
    spec = quick(epochs=40)
    off = replace(spec, train=replace(spec.train, lam=0.0, disc_lr=0.0))
    a, b = run_mgl(tiny, spec), run_mgal(tiny, off)
    assert a.accuracies == b.accuracies
    for p, q in zip(a.params, b.params):
        assert same_params(p, q, keys=p.keys())


def test_run_experiment_dispatch(tiny):
    spec = quick(method="gcn_single", view=0, runs=1)
    assert run_experiment(tiny, spec).accuracies == run_gcn_single(tiny, 0, spec).accuracies
    with pytest.raises(ConfigError):
        run_experiment(tiny, quick(method="gcn_single", view=5))


def test_view_subsets_enumerates_all_below_cap():
    for m in range(1, 6):
        for s in range(1, m + 1):
            assert view_subsets(m, s, cap=64, seed=0) == list(combinations(range(m), s))


def test_view_subsets_cap_sampling():
    a = view_subsets(8, 4, cap=5, seed=1)
    assert len(a) == 5 and len(set(a)) == 5 and a == sorted(a)
    assert set(a) <= set(combinations(range(8), 4))
    assert a == view_subsets(8, 4, cap=5, seed=1)


def test_sweep_structure_and_full_subset_agreement(tiny):
    spec = quick(runs=1, epochs=15)
    sweep = graph_count_sweep(tiny, spec)
    assert sweep.sizes == (1, 2, 3)
    assert [len(sweep.subsets[s]) for s in sweep.sizes] == [3, 3, 1]
    full = run_mgal(tiny, spec)
    assert sweep.results[(0, 1, 2)].accuracies == full.accuracies
    assert sweep.results[(1,)].accuracies == run_gcn_single(tiny, 1, spec).accuracies
    assert sweep.mean(3) == full.mean
    with pytest.raises(ConfigError):
        graph_count_sweep(tiny.subset_views([0]), spec)


def test_single_view_blind_to_merged_classes():
    # view separates every class pair except (2, 3)
    spec = SbmSpec([60] * 4, [0.15], [0.01], [grouping_pairs([[0], [1], [2, 3]])], noise=1.0, seed=0)
    ds = synth_multiview(spec)
    exp = ExperimentSpec(ratio=0.1, runs=1, train=TrainConfig(epochs=200))
    trainer = Trainer(ds, split_for(ds, exp, 0), exp.model, exp.train, "mgl")
    trainer.fit()
    pred = np.argmax(trainer.predictions()[0], axis=1)
    test = trainer.split.test
    merged = test[ds.labels[test] >= 2]
    kept = test[ds.labels[test] < 2]
    assert np.mean(pred[merged] == ds.labels[merged]) < 0.65
    assert np.mean(pred[kept] == ds.labels[kept]) > 0.8


@pytest.mark.slow
def test_more_labels_do_not_hurt():
    ds = synth_multiview(preset("default", seed=0))
    lo = run_mgal(ds, ExperimentSpec(ratio=0.1, runs=5))
    hi = run_mgal(ds, ExperimentSpec(ratio=0.3, runs=5))
    assert hi.mean >= lo.mean - 0.01

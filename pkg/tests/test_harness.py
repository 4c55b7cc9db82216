import numpy as np
import pytest

from radioshift.errors import ConfigError, TargetLabelAccessError
from radioshift.harness import (
    DomainData, DomainSpec, RunMetrics, ScenarioSpec, TrainConfig,
    accuracy_from_confusion, build_bundle, evaluate, expand_cells, fold_indices,
    recovery_over_base, run_scenario, stepwise_sweep, train_adapt, train_base,
    unlabeled,
)
from radioshift.harness.scenarios import summarize_rows
from radioshift.nnmodels import ResNetConfig
from radioshift.sigsynth import DatasetManifest, build_dataset
from radioshift.udalosses import AdaptConfig, Method

TINY = ResNetConfig(input_len=64, stem_channels=4, stage_channels=(4, 8), blocks_per_stage=1,
                    feature_dim=8, head_hidden=16)
FAST = TrainConfig(epochs=2, batch=16, seed=7)


def tiny_set(domain="SIM", snrs=(22.0,), per_class=16, seed=1):
    m = DatasetManifest(domain=domain, frames_per_class_per_snr=per_class, snr_grid_db=snrs,
                        frame_len=64, seed=seed)
    return build_dataset(m)


@pytest.fixture(scope="module")
def sim22():
    return tiny_set()


@pytest.fixture(scope="module")
def ota22():
    return tiny_set("OTA_EMU")


def same_params(a, b):
    sa, sb = a.state_dict(), b.state_dict()
    return all(sa[k].tobytes() == sb[k].tobytes() for k in sa if k.startswith(("f.", "y.")))


# -- splits -----------------------------------------------------------------------------
def test_fold_sizes_disjoint_and_covering():
    ds = tiny_set(per_class=64)
    seen = []
    for f in range(5):
        tr, ev = fold_indices(ds, f, 5)
        assert not set(tr) & set(ev)
        assert len(tr) + len(ev) == len(ds)
        counts = np.bincount(ds.mod_labels[ev], minlength=4)
        assert np.all((counts == 12) | (counts == 13))
        seen.append(ev)
    allev = np.concatenate(seen)
    assert len(allev) == len(ds) and set(allev) == set(range(len(ds)))


def test_fold_errors():
    ds = tiny_set(per_class=3)
    with pytest.raises(ConfigError):
        fold_indices(ds, 0, 5)
    with pytest.raises(ConfigError):
        fold_indices(ds, 5, 5)


def test_unlabeled_view_guard(sim22):
    v = unlabeled(sim22)
    assert v.frames is sim22.frames and len(v) == len(sim22)
    with pytest.raises(TargetLabelAccessError):
        v.mod_labels
    with pytest.raises(TargetLabelAccessError):
        v.labels


def test_adaptation_rejects_labeled_target(sim22, ota22):
    with pytest.raises(TargetLabelAccessError):
        train_adapt(sim22, ota22, AdaptConfig("coral"), FAST, TINY)


# -- metrics ----------------------------------------------------------------------------
def test_run_metrics_hand_example():
    m = RunMetrics([50, 52, 48, 51, 49])
    assert (m.mean, m.max, m.var) == (50.0, 52.0, 2.5)
    assert RunMetrics([40, 40, 40]).var == 0.0
    assert RunMetrics([33.0]).var == 0.0


def test_evaluate_identities(sim22):
    perfect = lambda frames: sim22.mod_labels
    acc, cm = evaluate(perfect, sim22)
    assert acc == 100.0 and np.array_equal(cm, np.diag(np.diag(cm)))
    acc, cm = evaluate(lambda frames: np.zeros(len(frames), int), sim22)
    assert acc == 25.0
    rng = np.random.default_rng(0)
    acc, cm = evaluate(lambda frames: rng.integers(0, 4, len(frames)), sim22)
    assert acc == pytest.approx(100 * np.trace(cm) / cm.sum())
    assert accuracy_from_confusion(cm) == pytest.approx(acc)


# -- training ---------------------------------------------------------------------------
def test_base_training_is_deterministic(sim22):
    a = train_base(sim22, FAST, TINY)
    b = train_base(sim22, FAST, TINY)
    sa, sb = a.state_dict(), b.state_dict()
    assert sa.keys() == sb.keys()
    assert all(sa[k].tobytes() == sb[k].tobytes() for k in sa)


def test_first_epoch_loss_below_chance():
    m = DatasetManifest(frames_per_class_per_snr=64, snr_grid_db=(22.0,), frame_len=1024, seed=2)
    b = train_base(build_dataset(m), TrainConfig.desk(epochs=1), ResNetConfig.desk())
    assert b.curve[0] < np.log(4)


@pytest.mark.parametrize("method", ["coral", "jan", "dann"])
def test_zero_lambda_reproduces_base(sim22, ota22, method):
    base = train_base(sim22, FAST, TINY)
    adapted = train_adapt(sim22, unlabeled(ota22), AdaptConfig(method, lam=0.0), FAST, TINY)
    assert same_params(base, adapted)
    assert np.array_equal(base.predict(ota22.frames), adapted.predict(ota22.frames))


@pytest.mark.parametrize("poison", ["constant", "shuffled"])
def test_target_labels_do_not_matter(sim22, ota22, poison):
    from dataclasses import replace
    labels = ota22.mod_labels
    bad = np.zeros_like(labels) if poison == "constant" else np.random.default_rng(0).permutation(labels)
    a = train_adapt(sim22, unlabeled(ota22), AdaptConfig("jan"), FAST, TINY)
    b = train_adapt(sim22, unlabeled(replace(ota22, mod_labels=bad)), AdaptConfig("jan"), FAST, TINY)
    sa, sb = a.state_dict(), b.state_dict()
    assert all(sa[k].tobytes() == sb[k].tobytes() for k in sa)


@pytest.mark.parametrize("method", ["dann", "mcd", "star", "coral", "jan"])
def test_every_method_trains(sim22, ota22, method):
    b = train_adapt(sim22, unlabeled(ota22), AdaptConfig(method), FAST, TINY)
    assert len(b.curve) == FAST.epochs and np.all(np.isfinite(b.curve))
    assert b.predict(ota22.frames).shape == (len(ota22),)
    if method == "dann":
        assert len(b.diagnostics) > 0 and all(0 <= d <= 1 for d in b.diagnostics)


def test_adapt_rejects_base(sim22, ota22):
    with pytest.raises(ValueError):
        train_adapt(sim22, unlabeled(ota22), AdaptConfig("base"), FAST, TINY)


def test_bundle_save_load(tmp_path, sim22):
    b = train_base(sim22, FAST, TINY)
    p = tmp_path / "m.rsck"
    b.save(p)
    from radioshift.harness import ModelBundle
    b2 = ModelBundle.load(p)
    assert np.array_equal(b.predict_proba(sim22.frames), b2.predict_proba(sim22.frames))


def test_methods_share_initial_weights():
    rng = lambda: np.random.default_rng(3)
    base = build_bundle(Method.BASE, TINY, rng())
    jan = build_bundle(Method.JAN, TINY, rng(), np.random.default_rng(4))
    dann = build_bundle(Method.DANN, TINY, rng(), np.random.default_rng(4))
    assert same_params(base, jan) and same_params(base, dann)


# -- scenarios --------------------------------------------------------------------------
def test_scenario_spec_validation():
    with pytest.raises(ConfigError):
        ScenarioSpec("cross-snr", DomainSpec("SIM", 22), DomainSpec("SIM", 22))
    with pytest.raises(ConfigError):
        ScenarioSpec("snr-matched", DomainSpec("SIM", 14), DomainSpec("OTA_EMU", 10))
    with pytest.raises(ConfigError):
        ScenarioSpec("stepwise", DomainSpec("OTA_EMU", 14), DomainSpec("SIM", 10))
    with pytest.raises(ConfigError):
        ScenarioSpec("sideways", DomainSpec("SIM", 14), DomainSpec("SIM", 10))


def test_cell_fan_out():
    grid = [2, 6, 10, 14, 18, 22]
    cells = expand_cells("cross-snr", grid, DomainSpec("SIM", 22))
    assert [t.snr_db for _, t in cells] == [2, 6, 10, 14, 18]
    assert len(expand_cells("snr-matched", grid)) == 5
    step = expand_cells("stepwise", grid, source_snrs=[10, 14, 18, 22])
    assert len(step) * 6 == 4 * 5 * 6
    assert all(s.domain == "SIM" and t.domain == "OTA_EMU" for s, t in step)
    assert all(s == t for s, t in expand_cells("in-domain", grid))


def test_run_scenario_and_base_cache():
    sim = tiny_set(snrs=(14.0, 22.0))
    data = DomainData({"SIM": sim})
    spec = ScenarioSpec("cross-snr", DomainSpec("SIM", 22), DomainSpec("SIM", 14),
                        AdaptConfig("base"), runs=2)
    cache, seen = {}, []
    m = run_scenario(spec, data, FAST, TINY, base_cache=cache, on_run=lambda f, a: seen.append(f))
    assert len(m.accuracies) == 2 and seen == [0, 1] and len(cache) == 2
    again = run_scenario(spec, data, FAST, TINY, base_cache=cache)
    assert again.accuracies == m.accuracies
    assert m.mean <= m.max and m.var >= 0


def test_missing_domain_is_reported():
    data = DomainData({"SIM": tiny_set()})
    with pytest.raises(FileNotFoundError, match="OTA_EMU"):
        data.get(DomainSpec("OTA_EMU", 22))


def test_stepwise_base_recovery_is_zero():
    sim, ota = tiny_set(snrs=(14.0,)), tiny_set("OTA_EMU", snrs=(10.0, 14.0))
    data = DomainData({"SIM": sim, "OTA_EMU": ota})
    metrics, rec = stepwise_sweep(data, [14.0], [10.0, 14.0], ["coral"], FAST, TINY, runs=2)
    assert len(metrics) == 4
    base_keys = [k for k in rec if k[2] == Method.BASE.value]
    assert len(base_keys) == 2 and all(rec[k] == 0.0 for k in base_keys)


def test_recovery_needs_base():
    b, j = Method.BASE.value, Method.JAN.value
    assert recovery_over_base({b: 40.0, j: 55.0}) == {b: 0.0, j: 15.0}
    with pytest.raises(ConfigError):
        recovery_over_base({j: 55.0})


def test_summary_rows():
    from radioshift.harness import CSV_HEADER
    vals = ["star", "cross-snr", "SIM", "22", "SIM", "14"]
    rows = [dict(zip(CSV_HEADER, vals + [str(i), str(a)])) for i, a in enumerate([50, 52, 48, 51, 49])]
    (cell,) = summarize_rows(rows).values()
    assert (cell.mean, cell.max, cell.var) == (50.0, 52.0, 2.5)

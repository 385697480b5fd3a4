import json
from dataclasses import replace

import numpy as np
import pytest

from attnctl.executive import Executive, TaskSpec, TaxonomyNode
from attnctl.harness import (
    BLOCK,
    ExperimentError,
    GroundTruth,
    InfeasibleTrial,
    TrialConfig,
    experiment_from_dict,
    gen_trial,
    judge,
    render,
    rng_for,
    run_experiment,
    run_trial,
    search_conditions,
    summarize,
)
from attnctl.memory import decision_cycles

L = 5


def _task(problem, looks="one", eye=False, **kw):
    kw.setdefault("deadline", 200)
    return TaskSpec(TaxonomyNode(problem, looks, eye), **kw)


SEARCH = _task("VisualSearch", deadline=2000, target="red+vertical")
DISC = _task("Discrimination", deadline=100, target="red+vertical")


def test_rng_is_keyed_by_seed_and_trial():
    a = rng_for(3, 1).random(4)
    assert np.array_equal(a, rng_for(3, 1).random(4))
    assert not np.array_equal(a, rng_for(3, 2).random(4))
    with pytest.raises(ValueError):
        rng_for(-1)


def test_search_fixture_seed_one():
    cfg = TrialConfig(seed=1, task=SEARCH, set_size=4, present_prob=1.0)
    stim, truth = gen_trial(cfg)
    assert truth.present and truth.correct_response == "present"
    assert truth.target_cells == ((5, 9), (5, 10), (6, 9), (6, 10))
    assert [it.kind for it in truth.items] == ["red+vertical", "green+vertical", "red+horizontal", "red+horizontal"]
    assert stim == render(truth.items, 16)
    again, truth2 = gen_trial(cfg)
    assert again == stim and truth2 == truth


def test_items_occupy_block_centres():
    _, truth = gen_trial(TrialConfig(seed=5, task=SEARCH, set_size=8))
    seen = set()
    for it in truth.items:
        assert it.block not in seen
        seen.add(it.block)
        for y, x in it.cells():
            assert y // BLOCK == it.block[0] and x // BLOCK == it.block[1]


@pytest.mark.parametrize(
    "kw",
    [dict(set_size=0), dict(set_size=17), dict(grid=10), dict(intensity=(0.0, 1.0)), dict(clutter=1.0), dict(cue_validity="maybe")],
)
def test_infeasible_configs(kw):
    with pytest.raises(InfeasibleTrial):
        TrialConfig(seed=0, task=SEARCH, **kw)


def test_unknown_target_is_infeasible():
    with pytest.raises(InfeasibleTrial):
        gen_trial(TrialConfig(seed=0, task=replace(DISC, target="blue+vertical")))


def test_clutter_spares_items():
    cfg = TrialConfig(seed=2, task=SEARCH, set_size=3, clutter=0.3)
    stim, truth = gen_trial(cfg)
    clean = render(truth.items, 16)
    cells = {c for it in truth.items for c in it.cells()}
    for y, x in cells:
        assert np.array_equal(stim.values[:, y, x], clean.values[:, y, x])
    assert stim.values.sum() > clean.values.sum()


def test_same_different_pairs():
    task = _task("SameDifferent", "n", True, deadline=1000)
    for i in range(10):
        _, truth = gen_trial(TrialConfig(seed=0, task=task, trial_index=i))
        a, b = truth.items
        assert (a.kind == b.kind) == (truth.correct_response == "same")
        assert a.block[0] == b.block[0] and a.block[1] < b.block[1]


def test_judge():
    truth = GroundTruth("location", ((4, 4), (4, 5), (5, 4), (5, 5)))
    assert judge(truth, "4.5,4.5") and not judge(truth, "7,7")
    assert not judge(truth, "nowhere") and not judge(truth, None)
    assert judge(GroundTruth("same"), "same") and not judge(GroundTruth("same"), "different")


def test_discrimination_cycles_are_the_declared_sum():
    r = run_trial(None, TrialConfig(seed=0, task=DISC), Executive())
    assert r.result == "success" and r.correct
    match = r.trace.first("match")
    assert match.duration >= 1
    assert r.cycles == L + 3 + match.duration


def test_stronger_percepts_decide_faster():
    def match_cycles(level):
        cfg = TrialConfig(seed=0, task=DISC, intensity=(level, level), present_prob=1.0)
        return run_trial(None, cfg, Executive()).trace.first("match").duration

    assert match_cycles(1.0) <= match_cycles(0.6) <= match_cycles(0.3)
    assert match_cycles(1.0) < match_cycles(0.3)
    assert decision_cycles(0.5) <= decision_cycles(0.25)


def test_one_cycle_deadline_fails():
    r = run_trial(None, TrialConfig(seed=0, task=replace(DISC, deadline=1)), Executive())
    assert r.result == "failure" and r.reason == "deadline" and not r.correct


def test_trial_determinism():
    cfg = TrialConfig(seed=4, task=_task("VisualSearch", "n", True, deadline=2000, target="red+vertical"), set_size=6)
    a = run_trial(None, cfg, Executive()).to_dict(with_trace=True)
    b = run_trial(None, cfg, Executive()).to_dict(with_trace=True)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_single_trial_experiment_equals_trial():
    cfg = TrialConfig(seed=0, task=DISC)
    rep = run_experiment([("only", cfg)], 1)
    single = run_trial(None, cfg, Executive())
    assert rep.trials["only"][0].to_dict() == single.to_dict()
    c = rep.condition("only")
    assert c.trials == 1 and c.mean_cycles == single.cycles and c.sd_cycles == 0.0
    with pytest.raises(KeyError):
        rep.condition("other")
    with pytest.raises(ValueError):
        run_experiment([("only", cfg)], 0)


def test_summary_counts():
    results = [run_trial(None, TrialConfig(seed=0, task=DISC, trial_index=i)) for i in range(4)]
    s = summarize("d", results)
    assert s.trials == 4 and s.failures == sum(r.result != "success" for r in results)
    assert s.repairs == sum(r.repairs for r in results)


def test_absent_search_slows_with_set_size():
    rep = run_experiment(search_conditions(0, (1, 2, 4, 8)), 8)
    means = [c.mean_cycles for c in rep.conditions]
    assert means == sorted(means) and means[0] < means[-1]
    assert all(c.accuracy == 1.0 for c in rep.conditions)


def test_report_formats():
    rep = run_experiment([("only", TrialConfig(seed=0, task=DISC))], 2, name="demo")
    assert rep.to_csv().splitlines()[0].startswith("name,trials,accuracy")
    assert rep.to_text().startswith("experiment demo (seed 0)")
    d = json.loads(rep.to_json())
    assert d["conditions"][0]["trials"] == 2 and len(d["trials"]["only"]) == 2


def test_experiment_files():
    name, conds, n = experiment_from_dict({"preset": "cueing", "n": 3, "seed": 7})
    assert name == "cueing" and n == 3 and [c for c, _ in conds] == ["valid", "neutral", "invalid"]
    assert all(cfg.seed == 7 for _, cfg in conds)
    _, conds, _ = experiment_from_dict({"preset": "search", "set_sizes": [2, 4], "eye_movements": True})
    assert [c for c, _ in conds] == ["nlook_n2", "nlook_n4"]
    d = {
        "task": {"problem": "Discrimination", "deadline": 100, "target": "red+vertical"},
        "conditions": [{"name": "dim", "trial": {"intensity": [0.3, 0.4]}}, {"name": "bright"}],
    }
    _, conds, _ = experiment_from_dict(d)
    assert conds[0][1].intensity == (0.3, 0.4)
    with pytest.raises(ExperimentError):
        experiment_from_dict({"preset": "nope"})
    with pytest.raises(ExperimentError):
        experiment_from_dict({"conditions": []})
    with pytest.raises(ExperimentError):
        experiment_from_dict({**d, "conditions": [{"trial": {"colour": 1}}]})
    with pytest.raises(ExperimentError):
        experiment_from_dict({"conditions": [{"name": "x"}]})

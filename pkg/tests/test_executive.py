import json

import numpy as np
import pytest

from attnctl.cp import Runtime, StaticScene, parse_cp
from attnctl.cp.ast import iter_calls
from attnctl.hierarchy import HierarchyConfig, Stimulus, build_hierarchy
from attnctl.cp.trace import ControlSignal, SignalTrace
from attnctl.executive import (
    BoundCp,
    Executive,
    GiveUp,
    MonitorState,
    NoCpForTask,
    Retry,
    TaskError,
    TaskSpec,
    TaxonomyNode,
    bind_program,
    classify_task,
    conformance,
    load_task,
    monitor,
    repair,
    run_task,
    select_cp,
    template_for,
)
from attnctl.harness import TrialConfig, gen_trial, make_runtime_factory, run_trial, task_hierarchy
from attnctl.objective import Deviation, objective_value


def _spec(problem, looks="one", eye=False, **kw):
    kw.setdefault("deadline", 200)
    return TaskSpec(TaxonomyNode(problem, looks, eye), **kw)


# -- taxonomy and task files -----------------------------------------------------


def test_taxonomy_invariants():
    with pytest.raises(TaskError):
        TaxonomyNode("Juggling")
    with pytest.raises(TaskError):
        TaxonomyNode("VisualSearch", "one", True)
    with pytest.raises(TaskError):
        TaxonomyNode("Classification", K=2, M=3)
    TaxonomyNode("Classification", K=3, M=2)
    with pytest.raises(TaskError):
        TaskSpec(TaxonomyNode("Detection"), deadline=5, start=5)


def test_task_file_round_trip(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"problem": "Discrimination", "deadline_ms": 1000, "target": "red+vertical"}))
    spec = load_task(p)
    assert spec.deadline == 100 and spec.taxonomy.looks == "one"
    assert TaskSpec.from_dict(spec.to_dict()) == spec
    assert TaskSpec.from_dict({"problem": "Detection", "deadline_ms": 1}).deadline == 1
    with pytest.raises(TaskError):
        TaskSpec.from_dict({"deadline": 10})


# -- classify ----------------------------------------------------------------------


def test_classify_examples():
    p = classify_task(_spec("Recognition"))
    assert (p.passes, p.saccades) == ("single", False)
    p = classify_task(_spec("VisualSearch", "n", True))
    assert (p.passes, p.saccades) == ("multi", True)
    assert classify_task(_spec("Identification")).passes == "ff+partial"
    assert classify_task(_spec("Localization")).passes == "ff+full"
    assert classify_task(_spec("GazeShift", "n", True)).saccades
    for prob in ("Discrimination", "Categorization", "Detection"):
        assert classify_task(_spec(prob)).passes == "single"
    for prob in ("Compare", "Measure", "SameDifferent"):
        assert classify_task(_spec(prob)).passes == "multi"


def _trace(*sigs):
    t = SignalTrace()
    for name, on, off, *params in sigs:
        t.add(ControlSignal(name, "TypeII", on, off, tuple(params)))
    return t


def test_conformance_checks():
    single = classify_task(_spec("Recognition"))
    ok = _trace(("prime", 0, 5), ("onset", 5, 5), ("feedforward", 5, 10), ("emit", 10, 11))
    assert conformance(ok, single) == []
    two = _trace(("onset", 0, 0), ("feedforward", 0, 5), ("feedforward", 5, 10))
    assert conformance(two, single)
    partial = classify_task(_spec("Identification"))
    ok = _trace(("onset", 0, 0), ("feedforward", 0, 5), ("localize", 5, 8, "partial"))
    assert conformance(ok, partial) == []
    nlook = classify_task(_spec("VisualSearch", "n", True))
    no_sacc = _trace(("onset", 0, 0), ("feedforward", 0, 5), ("localize", 5, 10, "full"))
    assert any("saccade" in p for p in conformance(no_sacc, nlook))


def test_per_frame_segments():
    prof = classify_task(_spec("Detection", "n"))
    frames = _trace(("onset", 0, 0), ("feedforward", 0, 5), ("onset", 5, 5), ("feedforward", 5, 10))
    assert conformance(frames, prof, per_frame=True) == []
    assert conformance(frames, prof) != []


# -- select / bind ---------------------------------------------------------------------


def test_select_examples():
    ex = Executive()
    b = ex.select(_spec("Discrimination", target="red+vertical"))
    assert b.name == "discrimination"
    assert b.args == {"target": "red+vertical", "tau": 0.1, "theta": 0.95}
    b = ex.select(_spec("VisualSearch", "n", True, target="red+vertical"))
    assert b.name == "search_nlook"
    assert any(c.name == "mark_ior" for c in iter_calls(b.program))
    with pytest.raises(NoCpForTask):
        ex.select(_spec("Measure"))
    with pytest.raises(NoCpForTask):
        select_cp({}, _spec("Detection", target="red"))
    with pytest.raises(TaskError):
        ex.select(_spec("Discrimination"))


def test_template_lookup():
    assert template_for(_spec("VisualSearch")) == "search_1look"
    assert template_for(_spec("Detection", cp="runner")) == "runner"


def test_bind_program_missing_formal():
    with pytest.raises(NoCpForTask):
        bind_program(parse_cp("cp t(speed) { }"), _spec("Detection"))


# -- objective -----------------------------------------------------------------------------


def test_objective_examples():
    assert objective_value([]) == 0.0
    assert objective_value([Deviation.spatial(0, (1, 2), (1, 2)), Deviation.scalar(1, 0.3, 0.3)]) == 0.0
    total = objective_value([Deviation.spatial(0, (0, 0), (3, 4)), Deviation.scalar(1, 0.0, 0.2)])
    assert total == pytest.approx(5.2)


# -- monitor --------------------------------------------------------------------------------


def _runtime_for(spec, seed=0):
    cfg = TrialConfig.from_task(seed, spec)
    stim, _ = gen_trial(cfg)
    bound = Executive().select(spec)
    return make_runtime_factory(cfg, stim, task_hierarchy())(bound, None)


def test_monitor_deadline_and_emit():
    spec = _spec("Detection", target="red", deadline=10)
    rt = _runtime_for(spec)
    ms = MonitorState("detection", 10)
    assert monitor(rt, ms) == ("continue", None)
    rt.clock.advance(11)
    assert monitor(rt, ms) == ("failure", "deadline")
    rt2 = _runtime_for(spec)
    rt2.response = "present"
    verdict = monitor(rt2, MonitorState("detection", 10), ControlSignal("emit", "TypeII", 0, 1))
    assert verdict == ("success", "present")
    rt2.last_match = (True, 0.5)
    verdict = monitor(rt2, MonitorState("detection", 10), ControlSignal("emit", "TypeII", 0, 1))
    assert verdict == ("failure", "unconfirmed-response")
    with pytest.raises(ValueError):
        MonitorState("x", 1, objective=-1.0)


# -- repair ---------------------------------------------------------------------------------


def test_repair_ladder():
    spec = _spec("Localization", target="red+vertical")
    b = Executive().select(spec)
    step = repair(spec, "localization", 1, b)
    assert isinstance(step, Retry) and step.cp.params["theta"] == pytest.approx(0.85)
    step2 = repair(spec, "localization", 2, step.cp)
    assert step2.cp.rescan
    step = repair(spec, "no-candidate", 1, b)
    assert isinstance(step, Retry) and step.cp.rescan and "IOR" in step.note
    assert isinstance(repair(spec, "localization", 4, b), GiveUp)
    assert isinstance(repair(spec, "deadline", 1, b), GiveUp)
    low = BoundCp(b.program, b.args, {"theta": 0.55})
    assert repair(spec, "localization", 1, low).cp.params["theta"] == 0.5


def test_restart_exhaustion_is_a_localization_failure():
    # the context-driven instance from the tuning tests, with no restarts allowed
    h = build_hierarchy(HierarchyConfig((1, 2, 4), (1, 1), (2,), (2,), beta=0.1))
    v = np.zeros((1, 2, 4))
    v[0, :, 0:2] = [[1.0, 0.6], [0.6, 0.6]]
    v[0, 0, 2] = 0.9
    prog = parse_cp("cp loc() { onset(); feedforward(); select_cfoa(); localize(full); emit(location); }")
    spec = _spec("Localization")
    bound = BoundCp(prog, {}, {"max_restarts": 0})

    def factory(b, previous):
        return Runtime(h, StaticScene(Stimulus(v), ("a",)), params=b.params)

    out = run_task(spec, bound, factory)
    assert out.result == "failure" and out.reason == "localization"
    assert [a.reason for a in out.attempts] == ["localization"] * 4
    assert [a.note for a in out.attempts[1:]] == ["relax theta", "rescan with IOR cleared", "relax theta and rescan"]


def test_every_trial_ends_within_four_executions():
    ex = Executive()
    spec = _spec("VisualSearch", "n", True, target="red+vertical", deadline=2000, stimulus={"set_size": 6})
    for i in range(5):
        r = run_trial(None, TrialConfig.from_task(0, spec, i), ex)
        assert 1 <= len(r.attempts) <= 4


def test_type_one_signals_stay_in_window():
    spec = _spec("Discrimination", target="red+vertical", deadline=100)
    r = run_trial(None, TrialConfig.from_task(0, spec), Executive())
    for s in r.trace.signals:
        if s.kind == "TypeI":
            assert spec.start <= s.t_on <= s.t_off <= spec.deadline

"""Static description of every CP primitive: arity, argument kinds, cost, signal type.

Each primitive belongs to one runtime operation and is tagged with the
attentional mechanisms it exercises.  Resource sets (``reads``/``writes``)
let the validator prove that the two branches of a ``par`` block touch
disjoint runtime state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MECHANISMS = (
    "Alerting",
    "Binding",
    "Covert Attention",
    "Disengage Attention",
    "Endogenous Influence",
    "Engage Attention",
    "Exogenous Influences",
    "Inhibition of Return",
    "Localization",
    "Neural Modulation",
    "Overt Attention",
    "Priming",
    "Recognition",
    "Salience/Conspicuity",
    "Search",
    "Selection",
    "Shift Attention",
    "Surround Suppression",
    "Visual Working Memory",
)

TYPE_I = "TypeI"
TYPE_II = "TypeII"

# Bare identifiers accepted per argument kind (anything else must be a formal).
LOCATIONS = frozenset({"center", "fixation", "focus", "left", "right", "gaze"})
FILTERS = frozenset({"fovea", "left", "right", "all"})
MODES = frozenset({"full", "partial"})
REGIONS = frozenset({"fovea", "focus"})
RESPONSES = frozenset({"location", "gaze"})
CLASSES = frozenset({"candidate"})
RELEVANCE = frozenset({"none", "all"})
PARAMS = frozenset(
    {
        "tau",
        "theta",
        "epsilon",
        "max_restarts",
        "g_low",
        "ior_decay",
        "k",
        "min_priority",
        "detect_threshold",
        "reach",
        "noise",
    }
)


@dataclass(frozen=True)
class ArgSpec:
    name: str
    kind: str  # "int", "num", "str", "key", "any"
    keywords: frozenset[str] = frozenset()


@dataclass(frozen=True)
class PrimitiveSpec:
    name: str
    args: tuple[ArgSpec, ...]
    required: int
    signal: str
    cost: str  # human-readable declared cost
    min_cost: int  # lower bound on cycles consumed for any L >= 2
    reads: frozenset[str] = frozenset()
    writes: frozenset[str] = frozenset()
    mechanisms: tuple[str, ...] = ()
    predicate: bool = False

    @property
    def arity(self) -> tuple[int, int]:
        return (self.required, len(self.args))


def _p(name, args=(), required=None, *, signal=TYPE_II, cost="1", min_cost=1, reads=(), writes=(), mech=(), pred=False):
    return PrimitiveSpec(
        name,
        tuple(args),
        len(args) if required is None else required,
        signal,
        cost,
        min_cost,
        frozenset(reads),
        frozenset(writes),
        tuple(mech),
        pred,
    )


REGISTRY: dict[str, PrimitiveSpec] = {
    p.name: p
    for p in [
        _p("prime", [ArgSpec("relevance", "str", RELEVANCE)], signal=TYPE_I, cost="L", min_cost=2,
           reads={"priming"}, writes={"priming"}, mech=("Priming", "Endogenous Influence", "Neural Modulation")),
        _p("disengage", reads={"focus", "suppression", "ior", "state"},
           writes={"focus", "suppression", "ior", "state"}, mech=("Disengage Attention", "Inhibition of Return")),
        _p("engage", [ArgSpec("location", "str", LOCATIONS)], signal=TYPE_I, reads={"gaze"},
           writes={"engaged"}, mech=("Engage Attention",)),
        _p("feedforward", cost="L", min_cost=2, reads={"priming", "suppression", "gaze", "stimulus"},
           writes={"state"}),
        _p("select_cfoa", [ArgSpec("filter", "str", FILTERS)], required=0, reads={"state", "gaze", "focus"},
           writes={"focus"}, mech=("Selection",), pred=True),
        _p("localize", [ArgSpec("mode", "str", MODES)], required=0, cost="L (full) or ceil(L/2) (partial), plus restarts",
           reads={"state", "focus", "priming", "suppression"}, writes={"state", "focus", "suppression"},
           mech=("Localization", "Surround Suppression", "Binding")),
        _p("match", [ArgSpec("key", "key")], signal=TYPE_I, cost="decision cycles", reads={"state", "focus", "wm"},
           writes={"match"}, mech=("Recognition",), pred=True),
        _p("store", [ArgSpec("key", "key"), ArgSpec("value", "str")], required=1, reads={"state", "focus"},
           writes={"wm"}, mech=("Visual Working Memory",)),
        _p("recall", [ArgSpec("key", "key")], reads={"wm"}, writes={"recalled"},
           mech=("Visual Working Memory",), pred=True),
        _p("saccade", [ArgSpec("target", "str", LOCATIONS)], signal=TYPE_I, cost="T_sacc (0 if already there)",
           min_cost=0, reads={"gaze", "fixation", "focus"}, writes={"gaze", "state"},
           mech=("Overt Attention", "Shift Attention")),
        _p("mark_ior", [ArgSpec("region", "str", REGIONS)], cost="0", min_cost=0, reads={"gaze", "focus", "ior"},
           writes={"ior"}, mech=("Inhibition of Return",)),
        _p("next_fixation", cost="1", reads={"ior", "stimulus"}, writes={"fixation"},
           mech=("Salience/Conspicuity", "Alerting", "Exogenous Influences"), pred=True),
        _p("emit", [ArgSpec("response", "str", RESPONSES)], reads={"focus", "gaze"}, writes={"response"}),
        _p("press", [ArgSpec("key", "str")], writes={"keys"}),
        _p("release", [ArgSpec("key", "str")], writes={"keys"}),
        _p("detect", [ArgSpec("class", "str", CLASSES)], reads={"state", "focus"}, mech=("Search",), pred=True),
        _p("relation", [ArgSpec("a", "str"), ArgSpec("b", "str"), ArgSpec("rel", "str")], reads={"state"},
           mech=("Binding",), pred=True),
        _p("set_param", [ArgSpec("name", "str", PARAMS), ArgSpec("value", "num")], signal=TYPE_I, cost="0",
           min_cost=0, writes={"params"}),
        _p("onset", cost="0 (one world frame)", min_cost=0, writes={"stimulus"}),
    ]
}

# ``wait`` is a statement form; it is listed for cost/trace bookkeeping only.
WAIT = _p("wait", [ArgSpec("cycles", "int")], cost="n", min_cost=0)


def mechanisms_of(signals) -> set[str]:
    """Attentional mechanisms exercised by a sequence of signals (by primitive name).

    Covert versus overt attention is read off the whole trace: selection with
    no saccade is covert.
    """
    names = [s.name if hasattr(s, "name") else str(s) for s in signals]
    out: set[str] = set()
    for n in names:
        spec = REGISTRY.get(n)
        if spec is not None:
            out.update(spec.mechanisms)
    if "select_cfoa" in names and "saccade" not in names:
        out.add("Covert Attention")
    return out

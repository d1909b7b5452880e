"""Counterfactual route explanation.

Answering "why edge A and not edge B?" about a solver route: re-solve with the
alternative edge forced, classify the intentions of both routes, summarize the
downstream influence of each edge into representative values, and render the
comparison as text (deterministic template or an LLM backend).
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Optional

import httpx

from .annotator import ComparisonPlan, make_solver, plan_for
from .core import (
    DEPOT,
    EdgeIntention,
    GlobalState,
    ProblemKind,
    Route,
    VrpError,
    VrpInstance,
    instance_from_dict,
    required_nodes,
    unvisited_penalty,
)
from .solver import FixedPrefix, SolverConfig, solve

log = logging.getLogger(__name__)

Edge = tuple[int, int]

#: classifier signature shared by the learned model and the rule-based one
ClassifierFn = Callable[[VrpInstance, Route], list[EdgeIntention]]


class QuestionError(VrpError):
    """Invalid or unparseable why-not question."""

    def __init__(self, code: str, message: str, raw: Optional[str] = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.raw = raw


@dataclass(frozen=True)
class WhyNotQuestion:
    """Which step of a route is questioned, and the preferred alternative.

    t_ex is 1-based: step t is the route's t-th edge. The counterfactual edge
    shares the actual edge's tail and points to a different, not yet visited
    head.
    """

    actual_route: Route
    t_ex: int
    cf_edge: Edge

    def __post_init__(self):
        edges = self.actual_route.edges
        if not 1 <= self.t_ex <= len(edges):
            raise QuestionError(
                "question_mismatch",
                f"t_ex must be in [1, {len(edges)}], got {self.t_ex}")
        actual = edges[self.t_ex - 1]
        tail, head = self.cf_edge
        if self.cf_edge == actual:
            raise QuestionError(
                "question_mismatch", "cf edge equals the actual edge")
        if tail != actual[0]:
            raise QuestionError(
                "question_mismatch",
                f"cf edge must leave node {actual[0]}, got {tail}")
        visited_before = set(self.actual_route.order[:self.t_ex])
        if head in visited_before:
            raise QuestionError(
                "question_mismatch", f"node {head} is already visited by step "
                f"{self.t_ex}")

    @property
    def actual_edge(self) -> Edge:
        return self.actual_route.edges[self.t_ex - 1]

    def as_dict(self) -> dict:
        return {"t_ex": self.t_ex,
                "actual_edge": list(self.actual_edge),
                "cf_edge": list(self.cf_edge)}


@dataclass(frozen=True)
class InfluenceTuple:
    """The downstream trace of an edge choice: the alternating states and
    intentions from the step after the explained edge to the route's end."""

    states: tuple[GlobalState, ...]       # S_{t+1} ... S_T
    intentions: tuple[EdgeIntention, ...]  # labels of steps t+1 ... T-1

    def __post_init__(self):
        if len(self.states) != len(self.intentions) + 1:
            raise VrpError("influence tuple lengths inconsistent")

    def as_dict(self) -> dict:
        return {"states": [s.as_dict() for s in self.states],
                "intentions": [i.as_dict() for i in self.intentions]}


def influence(route: Route, intentions: list[EdgeIntention],
              t: int) -> InfluenceTuple:
    """Slice states/intentions downstream of 1-based step t."""
    n_edges = len(route.edges)
    if len(intentions) != n_edges:
        raise VrpError("intentions length does not match route edges")
    if not 1 <= t <= n_edges:
        raise VrpError(f"step {t} out of range [1, {n_edges}]")
    return InfluenceTuple(states=tuple(route.states[t:]),
                          intentions=tuple(intentions[t:]))


@dataclass(frozen=True)
class RepresentativeValues:
    """Compact summary of an edge's influence.

    Objectives carry the kind's scalar (travel time for time-window kinds,
    length plus end-of-route penalties for prize kinds). class_ratio is the
    fraction of subsequent edges whose intention is class 0 (shortest-route
    behavior); it is omitted at the last edge, where no subsequent edges
    exist. feasibility_ratio is the fraction of the nodes still owed after the
    explained step that the rest of the route actually serves.
    """

    short_term_objective: float
    long_term_objective: float
    feasibility_ratio: float
    class_ratio: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "short_term_objective": self.short_term_objective,
            "long_term_objective": self.long_term_objective,
            "feasibility_ratio": self.feasibility_ratio,
        }
        if self.class_ratio is not None:
            out["class_ratio"] = self.class_ratio
        out["extras"] = dict(self.extras)
        return out

    def comparable_fields(self) -> dict[str, float]:
        out = {
            "short_term_objective": self.short_term_objective,
            "long_term_objective": self.long_term_objective,
            "feasibility_ratio": self.feasibility_ratio,
        }
        if self.class_ratio is not None:
            out["class_ratio"] = self.class_ratio
        for k, v in self.extras.items():
            if isinstance(v, (int, float)):
                out[f"extras.{k}"] = float(v)
        return out


def _state_objective(instance: VrpInstance, route: Route, state: GlobalState,
                     terminal: bool) -> float:
    kind = instance.kind
    base = state.travel_time if kind.has_time_windows else state.route_length
    if kind.has_prizes and terminal:
        base += unvisited_penalty(instance, route)
    return float(base)


def _owed_nodes(instance: VrpInstance) -> frozenset[int]:
    req = required_nodes(instance)
    if req:
        return req
    # optional-visit kinds owe nothing formally; measure coverage of all
    # non-depot nodes instead, so the ratio still carries signal
    return frozenset(range(1, instance.n_nodes))


def representative_values(instance: VrpInstance, route: Route,
                          intentions: list[EdgeIntention],
                          t: int) -> RepresentativeValues:
    """The four summary values (plus kind extras) of the edge at step t."""
    infl = influence(route, intentions, t)
    short = _state_objective(instance, route, route.states[t], terminal=False)
    long_ = _state_objective(instance, route, route.states[-1], terminal=True)

    class_ratio = None
    if infl.intentions:
        class_ratio = sum(1 for i in infl.intentions if i.class_id == 0) \
            / len(infl.intentions)

    owed = _owed_nodes(instance) - set(route.order[:t + 1])
    if owed:
        served = owed & set(route.order[t + 1:])
        feas = len(served) / len(owed)
    else:
        feas = 1.0

    extras: dict = {}
    final = route.states[-1]
    if instance.kind.has_prizes:
        extras["total_prize"] = float(final.accumulated_prize)
        extras["penalty_incurred"] = float(unvisited_penalty(instance, route))
    if instance.kind.has_time_windows:
        extras["arrival_time_next"] = float(route.states[t].travel_time)
        extras["time_window_violations"] = float(sum(
            1 for v in route.violations if v.code == "time_window"))
    if instance.kind.has_capacity:
        extras["remaining_capacity_next"] = float(
            route.states[t].remaining_capacity)
    extras["route_length"] = float(final.route_length)
    extras["missed_nodes"] = float(len(_owed_nodes(instance)
                                       - route.visited_set))
    return RepresentativeValues(
        short_term_objective=short, long_term_objective=long_,
        feasibility_ratio=feas, class_ratio=class_ratio, extras=extras)


def compare(rep_actual: RepresentativeValues,
            rep_cf: RepresentativeValues) -> dict[str, float]:
    """Signed elementwise difference cf - actual over the shared fields.

    Positive objective deltas mean the CF route is worse (costlier); positive
    feasibility deltas mean the CF route serves more of what is owed.
    """
    a = rep_actual.comparable_fields()
    b = rep_cf.comparable_fields()
    return {k: b[k] - a[k] for k in a if k in b}


def generate_cf_route(instance: VrpInstance, question: WhyNotQuestion,
                      config: SolverConfig = SolverConfig(),
                      kind: Optional[ProblemKind] = None) -> Route:
    """Best route forced through the actual prefix plus the CF edge."""
    prefix = FixedPrefix(
        question.actual_route.edges[:question.t_ex - 1] + (question.cf_edge,))
    return solve(instance, kind, prefix, config)


def rule_based_classifier(config: SolverConfig = SolverConfig(),
                          plan: Optional[ComparisonPlan] = None) -> ClassifierFn:
    """Intentions from re-solve comparison — the labeling rule itself, usable
    wherever a trained model would be."""
    from .annotator import annotate_route

    solver = make_solver(config)

    def fn(instance: VrpInstance, route: Route) -> list[EdgeIntention]:
        return annotate_route(route, instance, solver, plan)

    return fn


@dataclass(frozen=True)
class ExplanationBundle:
    question: WhyNotQuestion
    cf_route: Route
    actual_intentions: tuple[EdgeIntention, ...]
    cf_intentions: tuple[EdgeIntention, ...]
    influence_actual: InfluenceTuple
    influence_cf: InfluenceTuple
    rep_actual: RepresentativeValues
    rep_cf: RepresentativeValues
    comparison: dict[str, float]
    text: str = ""
    text_source: str = "template"

    def as_dict(self) -> dict:
        return {
            "question": self.question.as_dict(),
            "actual_route": self.question.actual_route.as_dict(),
            "cf_route": self.cf_route.as_dict(),
            "actual_intentions": [i.as_dict() for i in self.actual_intentions],
            "cf_intentions": [i.as_dict() for i in self.cf_intentions],
            "influence_actual": self.influence_actual.as_dict(),
            "influence_cf": self.influence_cf.as_dict(),
            "rep_actual": self.rep_actual.as_dict(),
            "rep_cf": self.rep_cf.as_dict(),
            "comparison": dict(self.comparison),
            "text": self.text,
            "text_source": self.text_source,
        }


# ---------------------------------------------------------------------------
# Text rendering

def _load_asset(name: str) -> str:
    return resources.files("routecf.assets").joinpath(name).read_text()


def load_demo_instance() -> VrpInstance:
    """The shipped nine-stop day-trip instance with time windows and stays."""
    data = json.loads(_load_asset("kyoto_day_trip.json"))
    return instance_from_dict(data)


_FIELD_PHRASES = {
    "short_term_objective": ("is costlier right after the questioned step",
                             "is cheaper right after the questioned step"),
    "long_term_objective": ("is costlier by the end of the route",
                            "is cheaper by the end of the route"),
    "feasibility_ratio": ("serves more of the remaining required stops",
                          "misses more of the remaining required stops"),
    "class_ratio": ("spends more of its remaining edges shortening the route",
                    "spends fewer of its remaining edges shortening the "
                    "route"),
}


def _node_name(instance: VrpInstance, i: int) -> str:
    return instance.nodes[i].label or f"node {i}"


def render_template_text(instance: VrpInstance,
                         bundle: ExplanationBundle) -> str:
    """Deterministic explanation naming every comparison field exactly once."""
    q = bundle.question
    lines = [
        f"At step {q.t_ex} the planned route goes to "
        f"{_node_name(instance, q.actual_edge[1])}; you asked about going to "
        f"{_node_name(instance, q.cf_edge[1])} instead."
    ]
    for key, delta in bundle.comparison.items():
        if key in _FIELD_PHRASES:
            phrase = _FIELD_PHRASES[key][0 if delta > 0 else 1]
            if abs(delta) < 1e-12:
                lines.append(f"- {key}: no difference.")
            else:
                lines.append(f"- {key}: the alternative {phrase} "
                             f"({delta:+.4f}).")
        else:
            lines.append(f"- {key}: {delta:+.4f} for the alternative.")
    cf_missed = bundle.rep_cf.extras.get("missed_nodes", 0)
    actual_missed = bundle.rep_actual.extras.get("missed_nodes", 0)
    if cf_missed > actual_missed:
        lines.append("Taking the alternative would leave stops unserved; the "
                     "planned edge protects the rest of the itinerary.")
    elif bundle.comparison.get("long_term_objective", 0) > 0:
        lines.append("The planned edge keeps the overall route cheaper, which "
                     "is why it was chosen.")
    else:
        lines.append("The alternative holds up well here; replacing the edge "
                     "is a reasonable preference.")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# LLM backend (generic JSON-over-HTTP chat completion)

@dataclass
class LlmClient:
    endpoint: str
    model: str
    api_key: Optional[str] = None
    timeout: float = 30.0

    @classmethod
    def from_env(cls) -> Optional["LlmClient"]:
        endpoint = os.environ.get("LLM_ENDPOINT")
        model = os.environ.get("LLM_MODEL")
        if not endpoint or not model:
            return None
        return cls(endpoint=endpoint, model=model,
                   api_key=os.environ.get("LLM_API_KEY"))

    def build_request(self, system_prompt: str) -> dict:
        return {
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "system", "content": system_prompt}],
        }

    def chat(self, system_prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = httpx.post(self.endpoint, json=self.build_request(system_prompt),
                          headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


def _route_info_text(instance: VrpInstance, route: Route) -> str:
    lines = []
    for t, (a, b) in enumerate(route.edges, start=1):
        lines.append(f"step {t}: {_node_name(instance, a)} (node {a}) -> "
                     f"{_node_name(instance, b)} (node {b})")
    unvisited = sorted(set(range(1, instance.n_nodes)) - route.visited_set)
    if unvisited:
        names = ", ".join(f"{_node_name(instance, i)} (node {i})"
                          for i in unvisited)
        lines.append(f"not visited: {names}")
    return "\n".join(lines)


def parse_question(payload, instance: VrpInstance, route: Route,
                   llm: Optional[LlmClient] = None) -> WhyNotQuestion:
    """Structured dict passes through validation; free text goes via the LLM.

    Structured form: {"t_ex": int, "cf_target_node": int}.
    """
    if isinstance(payload, WhyNotQuestion):
        return payload
    if isinstance(payload, dict):
        return _question_from_args(payload, route)
    if not isinstance(payload, str):
        raise QuestionError("parse_failed",
                            f"unsupported question type {type(payload).__name__}")
    llm = llm or LlmClient.from_env()
    if llm is None:
        raise QuestionError(
            "parse_failed",
            "free-text questions need an LLM (set LLM_ENDPOINT/LLM_MODEL) — "
            "use the structured form instead", raw=payload)
    prompt = _load_asset("question_prompt.txt") \
        .replace("{route_info}", _route_info_text(instance, route)) \
        .replace("{whynot_question}", payload)
    try:
        answer = llm.chat(prompt)
    except (httpx.HTTPError, KeyError, IndexError) as exc:
        raise QuestionError("parse_failed", f"LLM call failed: {exc}",
                            raw=payload)
    match = re.search(r"\{.*\}", answer, re.DOTALL)
    if not match:
        raise QuestionError("parse_failed", "no JSON in LLM output", raw=answer)
    try:
        args = json.loads(match.group(0))
    except json.JSONDecodeError:
        raise QuestionError("parse_failed", "malformed JSON from LLM",
                            raw=answer)
    if "error" in args:
        raise QuestionError("parse_failed", str(args["error"]), raw=answer)
    return _question_from_args(args, route)


def _question_from_args(args: dict, route: Route) -> WhyNotQuestion:
    try:
        t_ex = int(args["t_ex"])
        head = int(args.get("cf_target_node", args.get("cf_head")))
    except (KeyError, TypeError, ValueError):
        raise QuestionError(
            "parse_failed",
            "expected fields t_ex and cf_target_node", raw=json.dumps(args))
    if not 1 <= t_ex <= len(route.edges):
        raise QuestionError("question_mismatch",
                            f"t_ex {t_ex} outside [1, {len(route.edges)}]")
    tail = route.edges[t_ex - 1][0]
    return WhyNotQuestion(actual_route=route, t_ex=t_ex, cf_edge=(tail, head))


def render_text(instance: VrpInstance, bundle: ExplanationBundle,
                backend: str = "template",
                llm: Optional[LlmClient] = None) -> tuple[str, str]:
    """Returns (text, source). The LLM backend falls back to the template on
    any transport failure."""
    if backend not in ("template", "llm"):
        raise VrpError(f"unknown text backend {backend!r}")
    if backend == "llm":
        llm = llm or LlmClient.from_env()
        if llm is not None:
            payload = json.dumps(
                {"question": bundle.question.as_dict(),
                 "comparison": bundle.comparison,
                 "rep_actual": bundle.rep_actual.as_dict(),
                 "rep_cf": bundle.rep_cf.as_dict()},
                indent=2, sort_keys=True)
            prompt = _load_asset("explanation_prompt.txt") \
                .replace("{input}", payload)
            try:
                return llm.chat(prompt), "llm"
            except (httpx.HTTPError, KeyError, IndexError) as exc:
                log.warning("LLM explanation failed, using template: %s", exc)
        else:
            log.warning("no LLM configured, using template text")
    return render_template_text(instance, bundle), "template"


def explain(instance: VrpInstance, question: WhyNotQuestion,
            classifier: Optional[ClassifierFn] = None,
            solver_config: SolverConfig = SolverConfig(),
            text_backend: str = "template",
            llm: Optional[LlmClient] = None) -> ExplanationBundle:
    """The full pipeline for one question: CF route, intentions for both
    routes, influence tuples, representative values, comparison, text."""
    classifier = classifier or rule_based_classifier(solver_config)
    cf_route = generate_cf_route(instance, question, solver_config)
    actual_intentions = tuple(classifier(instance, question.actual_route))
    cf_intentions = tuple(classifier(instance, cf_route))
    t = question.t_ex
    infl_actual = influence(question.actual_route,
                            list(actual_intentions), t)
    infl_cf = influence(cf_route, list(cf_intentions), t)
    rep_actual = representative_values(
        instance, question.actual_route, list(actual_intentions), t)
    rep_cf = representative_values(instance, cf_route, list(cf_intentions), t)
    bundle = ExplanationBundle(
        question=question, cf_route=cf_route,
        actual_intentions=actual_intentions, cf_intentions=cf_intentions,
        influence_actual=infl_actual, influence_cf=infl_cf,
        rep_actual=rep_actual, rep_cf=rep_cf,
        comparison=compare(rep_actual, rep_cf))
    text, source = render_text(instance, bundle, text_backend, llm)
    return replace(bundle, text=text, text_source=source)

"""
Parallel member runs for compare / tune

input_handler -> dispatch_runs (one Send per member) -> execute_run -> collect_results
Results are merged through an operator.add reducer and re-ordered by member
index, so the output does not depend on completion order.
"""

import logging
import operator
from dataclasses import dataclass, replace
from typing import Annotated, Any, List, Optional, Sequence, Tuple, TypedDict

from langgraph.graph import END, StateGraph
from langgraph.types import Send

from infra.errors import PrecondMomentumError, UsageError
from optimizers import RunConfig, RunReport, run
from preconditioners import RngStream

logger = logging.getLogger(__name__)


@dataclass
class MemberResult:
    index: int
    label: str
    config: RunConfig
    report: Optional[RunReport] = None
    error: Optional[str] = None


class GraphState(TypedDict):
    members: List[Tuple[str, RunConfig]]
    objective: Any
    master_seed: int
    # collected from the parallel execute_run nodes
    results: Annotated[list, operator.add]
    ordered: list


class MemberState(TypedDict):
    index: int
    label: str
    config: RunConfig
    objective: Any


def member_seed(master_seed: int, index: int) -> int:
    return RngStream(master_seed).spawn(index).seed


def input_handler(state: GraphState) -> dict:
    members = state.get("members") or []
    if not members:
        raise UsageError("need at least one run configuration")
    return {"members": members}


def dispatch_runs(state: GraphState):
    """One Send per member, each with its own seed derived from (master seed, index)"""
    return [
        Send(
            "execute_run",
            {
                "index": index,
                "label": label,
                "config": replace(config, seed=member_seed(state["master_seed"], index)),
                "objective": state["objective"],
            },
        )
        for index, (label, config) in enumerate(state["members"])
    ]


def execute_run(state: MemberState) -> dict:
    label = state["label"]
    try:
        report = run(state["config"], state["objective"])
        result = MemberResult(state["index"], label, state["config"], report=report)
    except PrecondMomentumError as e:
        logger.warning(f"Member run {label!r} failed: {e}")
        result = MemberResult(state["index"], label, state["config"], error=str(e))
    return {"results": [result]}


def collect_results(state: GraphState) -> dict:
    return {"ordered": sorted(state["results"], key=lambda r: r.index)}


def build_run_graph():
    workflow = StateGraph(GraphState)

    workflow.add_node("input_handler", input_handler)
    workflow.add_node("execute_run", execute_run)
    workflow.add_node("collect_results", collect_results)

    workflow.set_entry_point("input_handler")
    workflow.add_conditional_edges("input_handler", dispatch_runs, ["execute_run"])
    workflow.add_edge("execute_run", "collect_results")
    workflow.add_edge("collect_results", END)

    return workflow.compile()


def run_members(members: Sequence[Tuple[str, RunConfig]], objective, master_seed: int = 0,
                max_workers: int = 4) -> List[MemberResult]:
    """Run every (label, config) on one objective; results in member order"""
    if not members:
        raise UsageError("need at least one run configuration")
    graph = build_run_graph()
    result = graph.invoke(
        {"members": list(members), "objective": objective, "master_seed": master_seed,
         "results": [], "ordered": []},
        config={"max_concurrency": max_workers},
    )
    return result["ordered"]

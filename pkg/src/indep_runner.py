"""
Executes a parsed problem file task by task and renders the report.

A task's failure never stops later tasks: errors are captured into that task's
outcome. The JSON rendering has sorted keys and no timestamps, so a fixed
problem file always yields the same bytes.
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Optional

from indep_extension import (
    CylinderEvent,
    FactorMeasure,
    extend,
    make_family,
    verify_finite_additivity,
    verify_union_representation,
    verify_uniqueness,
)
from indep_independence import (
    IndependenceVerdict,
    check_logical_independence,
    check_logical_independence_bruteforce,
    check_probabilistic_independence,
)
from indep_limit_lab import (
    SequenceSpec,
    cycle_rule,
    kolmogorov_condition,
    lindeberg_sum,
    log_damped_rule,
    make_coordinate_measure,
    make_range,
    power_rule,
    run_clt,
    run_lil,
    run_lln,
    select_identical_measures,
    select_per_coordinate_measures,
    sequence_variance_rule,
    write_csv,
)
from indep_problem import (
    AtomsMeasure,
    BlocksMeasure,
    CheckIndependenceTask,
    ProblemFile,
    SequenceRuleDecl,
    LogDampedRuleDecl,
)
from indep_signed import (
    SignedMeasure,
    check_independence_signed,
    check_uniform_independence,
    jordan_decompose,
)
from indep_space import AtomMeasure, FiniteSpace, generate_sigma_algebra, make_space
from utils.constants import (
    BRUTEFORCE_BUDGET,
    DEFAULT_WORKERS,
    ENUMERATION_LIMIT,
    EXIT_ALL_PASS,
    EXIT_ERROR,
    EXIT_FALSE_VERDICT,
    KOLMOGOROV_TOLERANCE,
    MAX_ATOMS,
    PROBLEM_FILE_VERSION,
)
from utils.errors import MeasureMismatch, NotAProbability
from utils.helpers import format_float, format_rational, hash_json

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
ERROR = "error"


@dataclass(frozen=True)
class TaskOutcome:
    index: int
    name: str
    task: str
    status: str
    result: dict = field(default_factory=dict)
    error: Optional[dict] = None

    def as_dict(self) -> dict:
        data = {
            "index": self.index,
            "name": self.name,
            "task": self.task,
            "status": self.status,
            "result": self.result,
        }
        if self.error is not None:
            data["error"] = self.error
        return data


@dataclass(frozen=True)
class Report:
    outcomes: tuple

    @property
    def exit_code(self) -> int:
        statuses = {o.status for o in self.outcomes}
        if ERROR in statuses:
            return EXIT_ERROR
        if FAIL in statuses:
            return EXIT_FALSE_VERDICT
        return EXIT_ALL_PASS

    def as_dict(self) -> dict:
        return {
            "version": PROBLEM_FILE_VERSION,
            "tasks": [o.as_dict() for o in self.outcomes],
            "summary": {
                status: sum(1 for o in self.outcomes if o.status == status)
                for status in (PASS, FAIL, ERROR)
            }
            | {"exit_code": self.exit_code},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def digest(self) -> str:
        return hash_json(self.as_dict())

    def to_text(self) -> str:
        lines = []
        for o in self.outcomes:
            title = f"[{o.index}] {o.task}" + (f" '{o.name}'" if o.name else "")
            lines.append(f"{title}: {o.status.upper()}")
            if o.error is not None:
                lines.append(f"    {o.error['type']}: {o.error['message']}")
            for key in sorted(o.result):
                lines.append(f"    {key}: {json.dumps(o.result[key], sort_keys=True, ensure_ascii=False)}")
        summary = self.as_dict()["summary"]
        lines.append(
            f"{summary[PASS]} passed, {summary[FAIL]} failed, {summary[ERROR]} errored "
            f"(exit {self.exit_code})"
        )
        lines.append(self.digest())
        return "\n".join(lines) + "\n"


class _Context:
    """Name resolution from a problem file to library objects, built lazily."""

    def __init__(self, problem: ProblemFile, wide: bool, config: dict):
        self.problem = problem
        self.config = config
        self.space: FiniteSpace = make_space(problem.space, max_atoms=None if wide else MAX_ATOMS)
        self.algebras = {
            name: generate_sigma_algebra(self.space, [self.space.event(g) for g in generators])
            for name, generators in problem.algebras.items()
        }
        self._weights: Dict[str, tuple] = {}

    def weights(self, name: str) -> tuple:
        """Exact atom weights of an atoms or mixture declaration."""
        if name in self._weights:
            return self._weights[name]
        decl = self.problem.measures[name]
        if isinstance(decl, BlocksMeasure):
            raise MeasureMismatch(f"block measure '{name}' can only be used as a factor")
        if isinstance(decl, AtomsMeasure):
            values = [Fraction(0)] * self.space.atom_count
            for label, w in decl.weights.items():
                values[self.space.index(label)] = w
            weights = tuple(values)
        else:
            values = [Fraction(0)] * self.space.atom_count
            for component in decl.components:
                for i, w in enumerate(self.weights(component.measure)):
                    values[i] += component.coefficient * w
            weights = tuple(values)
        self._weights[name] = weights
        return weights

    def atom_measure(self, name: str) -> AtomMeasure:
        weights = self.weights(name)
        if any(w < 0 for w in weights):
            raise NotAProbability(f"measure '{name}' has negative weights; use a signed task")
        return AtomMeasure(self.space, weights)

    def signed_measure(self, name: str) -> SignedMeasure:
        return SignedMeasure(self.space, self.weights(name))

    def factor(self, algebra_name: str, measure_name: str) -> FactorMeasure:
        algebra = self.algebras[algebra_name]
        decl = self.problem.measures[measure_name]
        if isinstance(decl, BlocksMeasure):
            if decl.algebra != algebra_name:
                raise MeasureMismatch(
                    f"measure '{measure_name}' is declared on '{decl.algebra}', not '{algebra_name}'"
                )
            return FactorMeasure.from_blocks(
                algebra, {self.space.event(item.event): item.weight for item in decl.weights}
            )
        return FactorMeasure.from_atom_measure(algebra, self.atom_measure(measure_name))

    def sequence(self, name: str, for_clt: bool = False) -> SequenceSpec:
        decl = self.problem.sequences[name]
        range_ = make_range(decl.support)
        if decl.measure is not None:
            return select_identical_measures(
                range_, make_coordinate_measure(decl.measure), decl.horizon, for_clt=for_clt
            )
        rule = cycle_rule([make_coordinate_measure(m) for m in decl.cycle])
        return select_per_coordinate_measures(range_, rule, decl.horizon)


def _event(e) -> list:
    return e.labels()


def _verdict(verdict: IndependenceVerdict, names: list) -> dict:
    data = {"independent": verdict.independent}
    if verdict.witness is not None:
        data["witness"] = [{"algebra": names[i], "event": _event(e)} for i, e in verdict.witness]
        data["intersection"] = _event(verdict.witness_intersection())
    if verdict.joint is not None:
        data["joint"] = format_rational(verdict.joint)
        data["product"] = format_rational(verdict.product)
    return data


def _cylinder(ctx: _Context, names: list, part: dict) -> CylinderEvent:
    return CylinderEvent.of({names.index(name): ctx.space.event(labels) for name, labels in part.items()})


def _check_independence(ctx: _Context, task: CheckIndependenceTask):
    algebras = [ctx.algebras[name] for name in task.algebras]
    if task.measure is not None:
        verdict = check_probabilistic_independence(algebras, ctx.atom_measure(task.measure))
        kind = "probabilistic"
    elif task.bruteforce:
        verdict = check_logical_independence_bruteforce(
            algebras, ctx.config["BRUTEFORCE_BUDGET"], ctx.config["ENUMERATION_LIMIT"]
        )
        kind = "logical-bruteforce"
    else:
        verdict = check_logical_independence(algebras)
        kind = "logical"
    return verdict.independent, {"kind": kind} | _verdict(verdict, task.algebras)


def _extension(ctx: _Context, task):
    return extend([ctx.factor(f.algebra, f.measure) for f in task.factors])


def _extend(ctx: _Context, task):
    P = _extension(ctx, task)
    atoms = P.to_atom_measure()
    return True, {
        "cells": [
            {"cell": _event(cell), "probability": format_rational(p)} for cell, p in P.cell_table()
        ],
        "atoms": {
            label: format_rational(w) for label, w in zip(ctx.space.atom_names, atoms.weights)
        },
    }


def _verify_additivity(ctx: _Context, task):
    P = _extension(ctx, task)
    names = [f.algebra for f in task.factors]
    report = verify_finite_additivity(P, [_cylinder(ctx, names, part) for part in task.parts])
    return report.holds, {
        "holds": report.holds,
        "parts_total": format_rational(report.parts_total),
        "union_total": format_rational(report.union_total),
        "chain_total": format_rational(report.chain_total),
        "d_chain_count": report.d_chain_count,
        "p_chain_count": report.p_chain_count,
        "cells_per_factor": list(report.cells_per_factor),
        "chains_in_exactly_one_part": report.chains_in_exactly_one_part,
    }


def _verify_union(ctx: _Context, task):
    family = make_family([ctx.algebras[name] for name in task.algebras])
    report = verify_union_representation(
        family, [_cylinder(ctx, task.algebras, part) for part in task.parts]
    )
    data = {"status": report.status, "union": _event(report.union)}
    if report.cylinder is not None and not report.cylinder.is_empty:
        data["cylinder"] = {task.algebras[i]: _event(e) for i, e in report.cylinder.factors}
    return report.representable, data


def _verify_uniqueness(ctx: _Context, task):
    P = _extension(ctx, task)
    report = verify_uniqueness(P, ctx.atom_measure(task.measure))
    data = {
        "holds": report.holds,
        "marginals_match": report.marginals_match,
        "independent": report.independent,
    }
    if report.witness is not None:
        data["witness"] = _verdict(report.witness, [f.algebra for f in task.factors])
    return report.holds, data


def _jordan(ctx: _Context, task):
    pair = jordan_decompose(ctx.signed_measure(task.measure))

    def table(measure):
        return {
            label: format_rational(w)
            for label, w in zip(ctx.space.atom_names, measure.weights)
            if w != 0
        }

    return True, {
        "positive": table(pair.positive),
        "negative": table(pair.negative),
        "hahn_positive_set": _event(pair.hahn_positive_set),
    }


def _signed_independence(ctx: _Context, task):
    verdict = check_independence_signed(
        [ctx.algebras[name] for name in task.algebras], ctx.signed_measure(task.measure)
    )
    return verdict.independent, {
        "independent": verdict.independent,
        "positive": None if verdict.positive is None else _verdict(verdict.positive, task.algebras),
        "negative": None if verdict.negative is None else _verdict(verdict.negative, task.algebras),
    }


def _uniform_independence(ctx: _Context, task):
    verdict = check_uniform_independence(
        [ctx.algebras[name] for name in task.algebras],
        [ctx.atom_measure(name) for name in task.measures],
    )
    data = {"independent": verdict.independent}
    if verdict.failing_measure is not None:
        data["failing_measure"] = task.measures[verdict.failing_measure]
        data["witness"] = _verdict(verdict.witness, task.algebras)
    return verdict.independent, data


def _lln(ctx: _Context, task):
    report = run_lln(ctx.sequence(task.sequence), task.n, task.seed)
    passed = task.max_deviation is None or abs(report.final_deviation) <= task.max_deviation
    return passed, report


def _clt(ctx: _Context, task):
    report = run_clt(
        ctx.sequence(task.sequence, for_clt=True), task.n, task.reps, task.seed, ctx.config["WORKERS"]
    )
    passed = task.max_ks is None or report.ks_distance <= task.max_ks
    return passed, report


def _lil(ctx: _Context, task):
    report = run_lil(ctx.sequence(task.sequence, for_clt=True), task.n, task.seed)
    passed = True
    if task.running_max_bounds is not None:
        low, high = task.running_max_bounds
        passed = low <= report.running_max <= high
    return passed, report


def _lindeberg(ctx: _Context, task):
    value = lindeberg_sum(ctx.sequence(task.sequence), task.n, task.epsilon)
    passed = task.max_value is None or value <= task.max_value
    return passed, {"value": format_rational(value), "value_float": format_float(float(value))}


def _kolmogorov(ctx: _Context, task):
    if isinstance(task.rule, SequenceRuleDecl):
        rule = sequence_variance_rule(ctx.sequence(task.rule.sequence))
    elif isinstance(task.rule, LogDampedRuleDecl):
        rule = log_damped_rule(task.rule.coefficient)
    else:
        rule = power_rule(task.rule.coefficient, task.rule.exponent)
    verdict = kolmogorov_condition(rule, task.tolerance or KOLMOGOROV_TOLERANCE)
    data = {
        "rule": rule.name,
        "status": verdict.status,
        "terms": verdict.terms,
        "partial_sum": format_float(verdict.partial_sum),
    }
    if verdict.tail_bound is not None:
        data["tail_bound"] = format_rational(verdict.tail_bound)
    return True, data


_HANDLERS: Dict[str, Callable] = {
    "check-independence": _check_independence,
    "extend": _extend,
    "verify-additivity": _verify_additivity,
    "verify-union": _verify_union,
    "verify-uniqueness": _verify_uniqueness,
    "jordan": _jordan,
    "signed-independence": _signed_independence,
    "uniform-independence": _uniform_independence,
    "lln": _lln,
    "clt": _clt,
    "lil": _lil,
    "lindeberg": _lindeberg,
    "kolmogorov": _kolmogorov,
}


def _default_config() -> dict:
    return {
        "WORKERS": DEFAULT_WORKERS,
        "ENUMERATION_LIMIT": ENUMERATION_LIMIT,
        "BRUTEFORCE_BUDGET": BRUTEFORCE_BUDGET,
        "WIDE_PROFILE": False,
    }


def run(
    problem: ProblemFile,
    config: Optional[dict] = None,
    csv_dir: Optional[Path] = None,
) -> Report:
    config = _default_config() | (config or {})
    ctx = _Context(problem, config["WIDE_PROFILE"], config)

    outcomes = []
    for index, task in enumerate(problem.tasks):
        logger.info(f"{index + 1:02d} - Running {task.task} '{task.name}'...")
        try:
            passed, result = _HANDLERS[task.task](ctx, task)
            if not isinstance(result, dict):
                if csv_dir is not None:
                    write_csv(result, Path(csv_dir) / f"task_{index:03d}_{result.mode.lower()}.csv")
                result = result.as_dict()
            status = PASS if passed else FAIL
            logger.info(f"{'✅' if passed else '❌'} Task {index} {status}")
            outcomes.append(TaskOutcome(index, task.name, task.task, status, result))
        except Exception as e:
            logger.error(f"💥 Task {index} ({task.task}) raised {type(e).__name__}: {e}")
            outcomes.append(
                TaskOutcome(
                    index,
                    task.name,
                    task.task,
                    ERROR,
                    error={"type": type(e).__name__, "message": str(e)},
                )
            )
    return Report(tuple(outcomes))

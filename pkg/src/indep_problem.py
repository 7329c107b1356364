"""
Problem files: a JSON document declaring a space, named algebras, measures and
sequences, plus an ordered task list. Rationals are written "p/q" (or as
integers); decimal literals are rejected so every measure stays exact.
"""

import json
import logging
import re
from fractions import Fraction
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    ValidationError,
    model_validator,
)
from pydantic_core import PydanticCustomError

from utils.constants import PROBLEM_FILE_VERSION
from utils.errors import IndepError
from utils.helpers import format_rational

logger = logging.getLogger(__name__)


class ProblemError(IndepError):
    pass


class ProblemSyntaxError(ProblemError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None, path: str = ""):
        self.line = line
        self.column = column
        self.path = path
        where = f" at line {line}, column {column}" if line is not None else ""
        where += f" at {path}" if path else ""
        super().__init__(f"{message}{where}")


class UnknownReference(ProblemError):
    pass


class BadRational(ProblemError):
    pass


class UnknownTask(ProblemError):
    pass


_RATIONAL = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise PydanticCustomError(
            "bad_rational", "rationals must be integers or 'p/q' strings, got {value}", {"value": value}
        )
    if isinstance(value, int):
        return Fraction(value)
    if not _RATIONAL.match(value.strip()):
        raise PydanticCustomError(
            "bad_rational", "'{value}' is not an exact rational 'p/q'", {"value": value}
        )
    numerator, _, denominator = value.strip().partition("/")
    if denominator and int(denominator) == 0:
        raise PydanticCustomError("bad_rational", "'{value}' has a zero denominator", {"value": value})
    return Fraction(int(numerator), int(denominator or 1))


Rational = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)


class WeightedEvent(_Model):
    event: List[str]
    weight: Rational


class AtomsMeasure(_Model):
    kind: Literal["atoms"]
    weights: Dict[str, Rational]


class BlocksMeasure(_Model):
    kind: Literal["blocks"]
    algebra: str
    weights: List[WeightedEvent]


class MixtureComponent(_Model):
    measure: str
    coefficient: Rational


class MixtureMeasure(_Model):
    kind: Literal["mixture"]
    components: List[MixtureComponent] = Field(min_length=1)


MeasureDecl = Annotated[Union[AtomsMeasure, BlocksMeasure, MixtureMeasure], Field(discriminator="kind")]


class SequenceDecl(_Model):
    support: List[Rational] = Field(min_length=1)
    horizon: int = Field(ge=1)
    measure: Optional[List[Rational]] = None
    cycle: Optional[List[List[Rational]]] = None

    @model_validator(mode="after")
    def _one_mode(self):
        if (self.measure is None) == (self.cycle is None):
            raise ValueError("a sequence declares exactly one of 'measure' or 'cycle'")
        if self.cycle is not None and not self.cycle:
            raise ValueError("'cycle' needs at least one measure")
        return self


class Factor(_Model):
    algebra: str
    measure: str


# A cylinder maps algebra names to atom labels; a missing algebra means Omega.
Cylinder = Dict[str, List[str]]


class _Task(_Model):
    name: str = ""


class CheckIndependenceTask(_Task):
    task: Literal["check-independence"]
    algebras: List[str]
    measure: Optional[str] = None
    bruteforce: bool = False


class ExtendTask(_Task):
    task: Literal["extend"]
    factors: List[Factor] = Field(min_length=1)


class VerifyAdditivityTask(_Task):
    task: Literal["verify-additivity"]
    factors: List[Factor] = Field(min_length=1)
    parts: List[Cylinder]


class VerifyUnionTask(_Task):
    task: Literal["verify-union"]
    algebras: List[str] = Field(min_length=1)
    parts: List[Cylinder]


class VerifyUniquenessTask(_Task):
    task: Literal["verify-uniqueness"]
    factors: List[Factor] = Field(min_length=1)
    measure: str


class JordanTask(_Task):
    task: Literal["jordan"]
    measure: str


class SignedIndependenceTask(_Task):
    task: Literal["signed-independence"]
    algebras: List[str]
    measure: str


class UniformIndependenceTask(_Task):
    task: Literal["uniform-independence"]
    algebras: List[str]
    measures: List[str]


class LLNTask(_Task):
    task: Literal["lln"]
    sequence: str
    n: int = Field(ge=1)
    seed: int = Field(ge=0)
    max_deviation: Optional[Rational] = None


class CLTTask(_Task):
    task: Literal["clt"]
    sequence: str
    n: int = Field(ge=1)
    reps: int = Field(ge=0)
    seed: int = Field(ge=0)
    max_ks: Optional[Rational] = None


class LILTask(_Task):
    task: Literal["lil"]
    sequence: str
    n: int = Field(ge=1)
    seed: int = Field(ge=0)
    running_max_bounds: Optional[List[Rational]] = Field(default=None, min_length=2, max_length=2)


class LindebergTask(_Task):
    task: Literal["lindeberg"]
    sequence: str
    n: int = Field(ge=1)
    epsilon: Rational
    max_value: Optional[Rational] = None


class PowerRuleDecl(_Model):
    kind: Literal["power"]
    coefficient: Rational
    exponent: int


class LogDampedRuleDecl(_Model):
    kind: Literal["log-damped"]
    coefficient: Rational


class SequenceRuleDecl(_Model):
    kind: Literal["sequence"]
    sequence: str


RuleDecl = Annotated[
    Union[PowerRuleDecl, LogDampedRuleDecl, SequenceRuleDecl], Field(discriminator="kind")
]


class KolmogorovTask(_Task):
    task: Literal["kolmogorov"]
    rule: RuleDecl
    tolerance: Optional[Rational] = None


TaskDecl = Annotated[
    Union[
        CheckIndependenceTask,
        ExtendTask,
        VerifyAdditivityTask,
        VerifyUnionTask,
        VerifyUniquenessTask,
        JordanTask,
        SignedIndependenceTask,
        UniformIndependenceTask,
        LLNTask,
        CLTTask,
        LILTask,
        LindebergTask,
        KolmogorovTask,
    ],
    Field(discriminator="task"),
]


def _unknown(what: str, name: str):
    return PydanticCustomError("unknown_reference", "unknown {what} '{name}'", {"what": what, "name": name})


class ProblemFile(_Model):
    version: Literal["1"] = PROBLEM_FILE_VERSION
    space: List[str] = Field(min_length=1)
    algebras: Dict[str, List[List[str]]] = Field(default_factory=dict)
    measures: Dict[str, MeasureDecl] = Field(default_factory=dict)
    sequences: Dict[str, SequenceDecl] = Field(default_factory=dict)
    tasks: List[TaskDecl] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_references(self):
        atoms = set(self.space)
        if len(atoms) != len(self.space):
            raise ValueError("atom labels must be distinct")

        def labels(items):
            for label in items:
                if label not in atoms:
                    raise _unknown("atom", label)

        def algebra(name):
            if name not in self.algebras:
                raise _unknown("algebra", name)

        def measure(name):
            if name not in self.measures:
                raise _unknown("measure", name)

        def sequence(name):
            if name not in self.sequences:
                raise _unknown("sequence", name)

        for generators in self.algebras.values():
            for g in generators:
                labels(g)

        declared = []
        for name, decl in self.measures.items():
            if isinstance(decl, AtomsMeasure):
                labels(decl.weights)
            elif isinstance(decl, BlocksMeasure):
                algebra(decl.algebra)
                for item in decl.weights:
                    labels(item.event)
            else:
                # mixtures only see measures declared above them
                for component in decl.components:
                    if component.measure not in declared:
                        raise _unknown("earlier measure", component.measure)
            declared.append(name)

        for task in self.tasks:
            for name in getattr(task, "algebras", []):
                algebra(name)
            for factor in getattr(task, "factors", []):
                algebra(factor.algebra)
                measure(factor.measure)
            for name in getattr(task, "measures", []):
                measure(name)
            if getattr(task, "measure", None) is not None:
                measure(task.measure)
            if getattr(task, "sequence", None) is not None:
                sequence(task.sequence)
            if isinstance(task, KolmogorovTask) and isinstance(task.rule, SequenceRuleDecl):
                sequence(task.rule.sequence)
            known = {f.algebra for f in getattr(task, "factors", [])} | set(getattr(task, "algebras", []))
            for part in getattr(task, "parts", []):
                for name, event in part.items():
                    if name not in known:
                        raise _unknown("task algebra", name)
                    labels(event)
        return self


def _from_validation_error(e: ValidationError) -> ProblemError:
    error = e.errors()[0]
    path = ".".join(str(part) for part in error["loc"])
    message = error["msg"]
    if error["type"] == "union_tag_invalid" and error["loc"][0] == "tasks" and len(error["loc"]) == 2:
        return UnknownTask(f"{message} at {path}")
    if error["type"] == "bad_rational":
        return BadRational(f"{message} at {path}")
    if error["type"] == "unknown_reference":
        return UnknownReference(message)
    return ProblemSyntaxError(message, path=path)


def parse_problem(text: Union[bytes, str]) -> ProblemFile:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ProblemSyntaxError(f"problem file is not UTF-8: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemSyntaxError(e.msg, line=e.lineno, column=e.colno) from e
    if not isinstance(data, dict):
        raise ProblemSyntaxError("a problem file is a JSON object")
    try:
        problem = ProblemFile.model_validate(data)
    except ValidationError as e:
        raise _from_validation_error(e) from e
    logger.debug(
        f"Parsed problem: {len(problem.space)} atoms, {len(problem.algebras)} algebras, "
        f"{len(problem.measures)} measures, {len(problem.tasks)} tasks"
    )
    return problem


def serialize_problem(problem: ProblemFile) -> str:
    data = problem.model_dump(mode="json", exclude_none=True)
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

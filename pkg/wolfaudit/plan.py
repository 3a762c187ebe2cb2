import itertools
import random
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .agent import PolicyId
from .game import DecisionKind, GenderConfig
from .prompts import TemplateId
from .roster import NameAssignment, name_roster
from .utils import ROUND_CAP, ConfigurationError, derive_seed

GENDERED_TEMPLATES = (
    TemplateId.T2_SELF_GENDER,
    TemplateId.T1_NO_GENDER,
    TemplateId.T3_SELF_GENDER_REVERSED,
    TemplateId.T4_OTHERS_SWAPPED,
)
NAME_TEMPLATES = (TemplateId.T5_NAME_PROXY, TemplateId.T1_NO_GENDER)


def enumerate_gender_configs() -> list[GenderConfig]:
    """All 48 configurations, seer gender varying slowest."""
    return [
        GenderConfig(seer, guard, wolves, villagers)
        for seer, guard, wolves, villagers in itertools.product(
            "MF", "MF", ("MM", "MF", "FF"), ("MMM", "MMF", "MFF", "FFF")
        )
    ]


def enumerate_name_assignments(seed: int, n: int) -> list[NameAssignment]:
    rng = random.Random(seed)
    names = [name for name, _ in name_roster()]
    assignments = []
    for _ in range(n):
        order = names[:]
        rng.shuffle(order)
        assignments.append(NameAssignment(tuple(order)))
    return assignments


class Study(StrEnum):
    GENDER = "gender"
    NAMES = "names"


class BackendSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: str = "gender-blind"
    model: str | None = None
    temperature: float = Field(0.0, ge=0.0, le=2.0)
    max_tokens: int = Field(1024, gt=0)

    @field_validator("kind")
    @classmethod
    def known_kind(cls, value: str) -> str:
        if value != "llm" and value not in [str(p) for p in PolicyId]:
            raise ValueError(f"unknown backend {value!r}")
        return value


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    plan_id: str = Field(pattern=r"^[A-Za-z0-9_.-]+$")
    study: Study = Study.GENDER
    # gender study: config keys such as "MF-MF-MMF"; empty means all 48
    configs: list[str] = Field(default_factory=list)
    repetitions: int = Field(1, ge=1)
    seed: int = 0
    canonical: TemplateId | None = None
    probe_plan: dict[DecisionKind, list[TemplateId]] = Field(default_factory=dict)
    backend: BackendSpec = Field(default_factory=BackendSpec)
    round_cap: int = Field(ROUND_CAP, ge=1)
    gamma_literal_max: bool = False

    @model_validator(mode="after")
    def check_templates(self) -> "ExperimentPlan":
        if self.study is Study.NAMES and self.configs:
            raise ValueError("name studies draw assignments from the seed, configs must be empty")
        for key in self.configs:
            try:
                GenderConfig.from_key(key).validate()
            except ConfigurationError as err:
                raise ValueError(str(err))
        allowed = NAME_TEMPLATES if self.study is Study.NAMES else GENDERED_TEMPLATES
        for kind, templates in self.probe_plan.items():
            if not kind.audited:
                raise ValueError(f"{kind} is not an audited decision kind")
            if self.canonical_template not in templates:
                raise ValueError(f"probe plan for {kind} misses canonical {self.canonical_template}")
            if set(templates) - set(allowed):
                raise ValueError(f"templates {sorted(set(templates) - set(allowed))} not usable in a {self.study} study")
        if self.canonical_template not in allowed:
            raise ValueError(f"canonical {self.canonical_template} not usable in a {self.study} study")
        return self

    @property
    def canonical_template(self) -> TemplateId:
        if self.canonical is not None:
            return self.canonical
        return TemplateId.T5_NAME_PROXY if self.study is Study.NAMES else TemplateId.T2_SELF_GENDER

    def templates_for(self, kind: DecisionKind) -> list[TemplateId]:
        if kind in self.probe_plan:
            return list(self.probe_plan[kind])
        if not self.probe_plan and kind.audited:
            return list(NAME_TEMPLATES if self.study is Study.NAMES else GENDERED_TEMPLATES)
        return [self.canonical_template]

    def gender_configs(self) -> list[GenderConfig]:
        if self.configs:
            return [GenderConfig.from_key(key) for key in self.configs]
        return enumerate_gender_configs()

    @property
    def match_count(self) -> int:
        if self.study is Study.NAMES:
            return self.repetitions
        return len(self.gender_configs()) * self.repetitions

    def matches(self) -> list["MatchSpec"]:
        if self.study is Study.NAMES:
            assignments = enumerate_name_assignments(derive_seed(self.seed, "names"), self.repetitions)
            return [
                MatchSpec(
                    match_id=f"{self.plan_id}-n{index:03d}",
                    seed=derive_seed(self.seed, "match", index),
                    names=assignment,
                )
                for index, assignment in enumerate(assignments)
            ]
        return [
            MatchSpec(
                match_id=f"{self.plan_id}-g{index:02d}-r{rep}",
                seed=derive_seed(self.seed, config.key, rep),
                config=config,
            )
            for index, config in enumerate(self.gender_configs())
            for rep in range(self.repetitions)
        ]


@dataclass(frozen=True)
class MatchSpec:
    match_id: str
    seed: int
    config: GenderConfig | None = None
    names: NameAssignment | None = None

    def describe(self) -> str:
        if self.names is not None:
            return f"{self.match_id} seed={self.seed} names={','.join(self.names.names)}"
        return f"{self.match_id} seed={self.seed} config={self.config.key}"


def load_plan(path: Path | str) -> ExperimentPlan:
    path = Path(path)
    try:
        return ExperimentPlan.model_validate(orjson.loads(path.read_bytes()))
    except FileNotFoundError as e:
        raise ConfigurationError("计划文件不存在", path, e)
    except orjson.JSONDecodeError as e:
        raise ConfigurationError("计划文件不是合法 JSON", path, e)
    except ValidationError as e:
        raise ConfigurationError("计划文件校验失败", path, e)

from dataclasses import dataclass
from enum import StrEnum

from .utils import ConfigurationError


class Gender(StrEnum):
    MALE = "M"
    FEMALE = "F"

    @property
    def opposite(self) -> "Gender":
        return Gender.FEMALE if self is Gender.MALE else Gender.MALE

    @property
    def word(self) -> str:
        return "male" if self is Gender.MALE else "female"


# Seven first names above 99% gender association in SSA records, cross-checked
# against a name-to-gender predictor. Order matters: it is the canonical order
# used by reports.
NAME_ROSTER: tuple[tuple[str, Gender], ...] = (
    ("Scott", Gender.MALE),
    ("Timothy", Gender.MALE),
    ("Kenneth", Gender.MALE),
    ("Keith", Gender.MALE),
    ("Judith", Gender.FEMALE),
    ("Mildred", Gender.FEMALE),
    ("Elizabeth", Gender.FEMALE),
)

_GENDER_BY_NAME = dict(NAME_ROSTER)


def name_roster() -> list[tuple[str, Gender]]:
    return list(NAME_ROSTER)


def lookup(name: str) -> Gender:
    try:
        return _GENDER_BY_NAME[name]
    except KeyError:
        raise ConfigurationError("名字不在名单中", name)


@dataclass(frozen=True)
class NameAssignment:
    """Bijection roster -> seats; names[i] sits at seat i + 1."""

    names: tuple[str, ...]

    def __post_init__(self):
        if sorted(self.names) != sorted(_GENDER_BY_NAME):
            raise ConfigurationError("名字分配不是名单的排列", self.names)

    def name_for(self, seat: int) -> str:
        return self.names[seat - 1]

    def gender_for(self, seat: int) -> Gender:
        return lookup(self.name_for(seat))

    def as_dict(self) -> dict[int, str]:
        return {seat: name for seat, name in enumerate(self.names, start=1)}

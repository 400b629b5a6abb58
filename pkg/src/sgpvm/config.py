"""Experiment configuration: a flat, typed, diff-able INI format.

Sections: [experiment] for run-level fields, [problem] for the environment,
[mutation] for operator rates. Unknown sections or keys are rejected so a
typo cannot silently fall back to a default. Configs round-trip losslessly
through `config_to_text` / `parse_config`.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .cpu import BACKENDS
from .evolution import SELECTION_SCHEMES, EvolutionSetup
from .mutation import MutationConfig
from .problems import (
    CHANGING_ENV_K_CHOICES,
    ChangingEnvConfig,
    ContextualSignalConfig,
)

PROBLEMS = ("changing_env", "contextual_signal")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str
    population: int = 100
    generations: int = 1000
    selection: str = ""  # defaulted per problem when empty
    seed: int = 1
    replicates: int = 1
    out_dir: str = "runs/out"
    backend: str = "lite"
    k: int = 2
    cycles_per_signal: int = 128
    regulation: bool = True
    response_table: tuple[tuple[int, ...], ...] | None = None
    ancestor_length: int = 100
    ancestor_anchors: int | None = None
    mutation: MutationConfig = field(default_factory=MutationConfig)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if not self.selection:
            self.selection = "elite_roulette" if self.problem == "changing_env" else "lexicase"
        if self.selection not in SELECTION_SCHEMES:
            raise ConfigError(f"selection must be one of {SELECTION_SCHEMES}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        if self.population < 1:
            raise ConfigError("population must be >= 1")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.replicates < 0:
            raise ConfigError("replicates must be >= 0")
        if self.problem == "changing_env" and self.k not in CHANGING_ENV_K_CHOICES:
            raise ConfigError(f"k must be one of {CHANGING_ENV_K_CHOICES}")
        if self.cycles_per_signal < 0:
            raise ConfigError("cycles_per_signal must be >= 0")
        if self.ancestor_length < 1:
            raise ConfigError("ancestor_length must be >= 1")
        if self.response_table is not None:
            if len(self.response_table) != 4 or any(len(r) != 4 for r in self.response_table):
                raise ConfigError("response_table must be 4 rows of 4 digits")
            if any(not 0 <= v < 4 for r in self.response_table for v in r):
                raise ConfigError("response_table entries must be in [0, 4)")

    def build_problem(self) -> ChangingEnvConfig | ContextualSignalConfig:
        """Problem instance with signal tags derived from the master seed."""
        if self.problem == "changing_env":
            return ChangingEnvConfig.from_seed(self.k, self.seed, self.cycles_per_signal)
        return ContextualSignalConfig.from_seed(
            self.seed, self.regulation, self.response_table, self.cycles_per_signal
        )

    def build_setup(self, problem=None) -> EvolutionSetup:
        return EvolutionSetup(
            problem=problem if problem is not None else self.build_problem(),
            population_size=self.population,
            generations=self.generations,
            selection=self.selection,
            mutation=self.mutation,
            seed=self.seed,
            backend=self.backend,
            ancestor_length=self.ancestor_length,
            ancestor_anchors=self.ancestor_anchors,
        )


_EXPERIMENT_KEYS = {
    "problem", "population", "generations", "selection",
    "seed", "replicates", "out_dir", "backend",
}
_PROBLEM_KEYS = {
    "k", "cycles_per_signal", "regulation", "response_table",
    "ancestor_length", "ancestor_anchors",
}
_MUTATION_KEYS = {
    "tag_bit_flip", "opcode_sub", "operand_sub", "insert", "delete", "max_length",
}


def _table_to_text(table: tuple[tuple[int, ...], ...]) -> str:
    return ";".join("".join(str(v) for v in row) for row in table)


def _table_from_text(text: str) -> tuple[tuple[int, ...], ...]:
    rows = text.split(";")
    try:
        table = tuple(tuple(int(ch) for ch in row) for row in rows)
    except ValueError:
        raise ConfigError(f"bad response_table {text!r}") from None
    return table


def _parse_bool(value: str, key: str) -> bool:
    low = value.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"bad config syntax: {e}") from None

    known_sections = {"experiment", "problem", "mutation"}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section [{section}]")
        allowed = {
            "experiment": _EXPERIMENT_KEYS,
            "problem": _PROBLEM_KEYS,
            "mutation": _MUTATION_KEYS,
        }[section]
        for key in parser[section]:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    if "experiment" not in parser or "problem" not in parser["experiment"]:
        raise ConfigError("missing [experiment] problem entry")
    exp = parser["experiment"]
    prob = parser["problem"] if "problem" in parser else {}
    mut = parser["mutation"] if "mutation" in parser else {}

    def get_int(section, key, default):
        raw = section.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from None

    def get_float(section, key, default):
        raw = section.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from None

    try:
        mutation = MutationConfig(
            tag_bit_flip_rate=get_float(mut, "tag_bit_flip", 0.002),
            opcode_sub_rate=get_float(mut, "opcode_sub", 0.005),
            operand_sub_rate=get_float(mut, "operand_sub", 0.005),
            insertion_rate=get_float(mut, "insert", 0.005),
            deletion_rate=get_float(mut, "delete", 0.005),
            max_length=get_int(mut, "max_length", 256),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None

    table_raw = prob.get("response_table") if prob else None
    anchors_raw = prob.get("ancestor_anchors") if prob else None
    return ExperimentConfig(
        problem=exp.get("problem"),
        population=get_int(exp, "population", 100),
        generations=get_int(exp, "generations", 1000),
        selection=exp.get("selection", ""),
        seed=get_int(exp, "seed", 1),
        replicates=get_int(exp, "replicates", 1),
        out_dir=exp.get("out_dir", "runs/out"),
        backend=exp.get("backend", "lite"),
        k=get_int(prob, "k", 2),
        cycles_per_signal=get_int(prob, "cycles_per_signal", 128),
        regulation=_parse_bool(prob.get("regulation", "true"), "regulation") if prob else True,
        response_table=_table_from_text(table_raw) if table_raw else None,
        ancestor_length=get_int(prob, "ancestor_length", 100),
        ancestor_anchors=int(anchors_raw) if anchors_raw else None,
        mutation=mutation,
    )


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical, fully explicit rendering; parse_config inverts it."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["experiment"] = {
        "problem": cfg.problem,
        "population": str(cfg.population),
        "generations": str(cfg.generations),
        "selection": cfg.selection,
        "seed": str(cfg.seed),
        "replicates": str(cfg.replicates),
        "out_dir": cfg.out_dir,
        "backend": cfg.backend,
    }
    problem: dict[str, str] = {
        "cycles_per_signal": str(cfg.cycles_per_signal),
        "ancestor_length": str(cfg.ancestor_length),
    }
    if cfg.problem == "changing_env":
        problem["k"] = str(cfg.k)
    else:
        problem["regulation"] = "true" if cfg.regulation else "false"
        if cfg.response_table is not None:
            problem["response_table"] = _table_to_text(cfg.response_table)
    if cfg.ancestor_anchors is not None:
        problem["ancestor_anchors"] = str(cfg.ancestor_anchors)
    parser["problem"] = problem
    parser["mutation"] = {
        "tag_bit_flip": repr(cfg.mutation.tag_bit_flip_rate),
        "opcode_sub": repr(cfg.mutation.opcode_sub_rate),
        "operand_sub": repr(cfg.mutation.operand_sub_rate),
        "insert": repr(cfg.mutation.insertion_rate),
        "delete": repr(cfg.mutation.deletion_rate),
        "max_length": str(cfg.mutation.max_length),
    }
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()

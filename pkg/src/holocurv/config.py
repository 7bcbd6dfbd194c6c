"""Scenario files: INI sections with typed keys and line-numbered diagnostics.

Grammar::

    # comment
    [scenario NAME]          inequality checks on one map
    source = cp1_fs              metric name (required)
    target = cp1_fs              metric name (default: source)
    map = power:d=2              map name (default: identity)
    checks = main_inequality, cpn_bound, chern_lu
    resolution = 48              integer (default: model lab resolution)
    seed = 0                     integer
    weight = 0.0                 constant conformal weight phi (default: none)
    eps = 0.01, 0.1, 1           Chern-Lu regularization values
    points = 20                  Chern-Lu sample points

    [krf NAME]               class-level flow classification
    source = cp1_fs_conformal:seed=1,eps=0.2
    target = torus_flat*torus_flat   omitted for a declared target
    map = embed:factor=0             omitted for a declared target
    eta0_pairing = 1.0               declared pairings (optional with a map)
    ky_pairing = 0.0
    target_nef = true
    provenance = declared in scenario file

Values are stripped; lists are comma separated.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigInvalid, HolocurvError
from .maps import resolve_map
from .models import resolve

CHECKS = (
    "main_inequality", "cpn_bound", "degeneracy_inequality", "chern_lu", "schwarz_integral",
    "equality_case_ke", "dominated_convergence", "lambda_integral",
)

_COMMON = {"source", "seed", "resolution"}
_KEYS = {
    "scenario": _COMMON | {"target", "map", "checks", "weight", "eps", "points"},
    "krf": _COMMON | {"target", "map", "eta0_pairing", "ky_pairing", "target_nef", "provenance"},
}


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    source: str
    target: str | None = None
    map: str | None = None
    checks: tuple = ()
    resolution: int | None = None
    seed: int = 0
    weight: float | None = None
    eps: tuple = (0.01, 0.1, 1.0)
    points: int = 20
    declared: dict = field(default_factory=dict)
    line: int | None = None

    def echo(self):
        out = {"name": self.name, "kind": self.kind, "source": self.source, "target": self.target,
               "map": self.map, "checks": list(self.checks), "resolution": self.resolution,
               "seed": self.seed, "weight": self.weight}
        if self.kind == "scenario":
            out.update({"eps": list(self.eps), "points": self.points})
        if self.declared:
            out["declared"] = dict(self.declared)
        return out


def _line_index(text):
    """``{(section, key): line}`` and ``{section: line}`` by scanning the raw text."""
    keys, sections = {}, {}
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            current = m.group(1).strip()
            sections.setdefault(current, no)
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and current is not None:
            keys.setdefault((current, m.group(1).strip().lower()), no)
    return keys, sections


class _Reader:
    def __init__(self, section, data, lines):
        self.section, self.data, self.lines = section, data, lines

    def fail(self, key, message):
        raise ConfigInvalid(message, key=key, line=self.lines.get((self.section, key)))

    def raw(self, key, default=None, required=False):
        if key in self.data:
            val = self.data[key].strip()
            if val == "":
                self.fail(key, f"[{self.section}] key {key!r} is empty")
            return val
        if required:
            raise ConfigInvalid(f"[{self.section}] missing required key {key!r}", key=key,
                                line=self.lines.get((self.section, None)))
        return default

    def integer(self, key, default=None, minimum=None):
        val = self.raw(key)
        if val is None:
            return default
        try:
            out = int(val)
        except ValueError:
            self.fail(key, f"[{self.section}] {key} must be an integer, got {val!r}")
        if minimum is not None and out < minimum:
            self.fail(key, f"[{self.section}] {key} must be >= {minimum}")
        return out

    def number(self, key, default=None):
        val = self.raw(key)
        if val is None:
            return default
        try:
            return float(val)
        except ValueError:
            self.fail(key, f"[{self.section}] {key} must be a number, got {val!r}")

    def numbers(self, key, default):
        val = self.raw(key)
        if val is None:
            return default
        try:
            return tuple(float(v) for v in val.split(",") if v.strip())
        except ValueError:
            self.fail(key, f"[{self.section}] {key} must be a comma-separated list of numbers")

    def boolean(self, key, default=None):
        val = self.raw(key)
        if val is None:
            return default
        low = val.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        self.fail(key, f"[{self.section}] {key} must be true or false, got {val!r}")

    def metric(self, key, default=None, required=False):
        name = self.raw(key, default, required)
        if name is None:
            return None
        try:
            resolve(name)
        except HolocurvError as exc:
            self.fail(key, f"[{self.section}] {key}: {exc}")
        return name


def _parse_section(section, data, lines):
    kind, _, name = section.partition(" ")
    name = name.strip()
    if kind not in _KEYS or not name:
        raise ConfigInvalid(f"section [{section}] must be '[scenario NAME]' or '[krf NAME]'",
                            line=lines[1].get(section))
    r = _Reader(section, data, {**lines[0], (section, None): lines[1].get(section)})
    for key in data:
        if key not in _KEYS[kind]:
            r.fail(key, f"[{section}] unknown key {key!r}; allowed: {', '.join(sorted(_KEYS[kind]))}")
    source = r.metric("source", required=True)
    common = dict(name=name, kind=kind, source=source, resolution=r.integer("resolution", minimum=2),
                  seed=r.integer("seed", 0, minimum=0), line=lines[1].get(section))
    if kind == "scenario":
        target = r.metric("target", source)
        map_name = r.raw("map", "identity")
        _check_map(r, map_name, source, target)
        checks = tuple(c.strip() for c in r.raw("checks", required=True).split(",") if c.strip())
        if not checks:
            r.fail("checks", f"[{section}] checks list is empty")
        for c in checks:
            if c not in CHECKS:
                r.fail("checks", f"[{section}] unknown check {c!r}; known: {', '.join(CHECKS)}")
        eps = r.numbers("eps", (0.01, 0.1, 1.0))
        if not eps or any(e <= 0 for e in eps):
            r.fail("eps", f"[{section}] eps values must be positive")
        return Scenario(target=target, map=map_name, checks=checks, weight=r.number("weight"),
                        eps=eps, points=r.integer("points", 20, minimum=1), **common)
    target = r.metric("target")
    map_name = r.raw("map")
    if (target is None) != (map_name is None):
        r.fail("map" if map_name is None else "target", f"[{section}] map and target go together")
    if map_name is not None:
        _check_map(r, map_name, source, target)
    declared = {}
    for key in ("eta0_pairing", "ky_pairing"):
        val = r.number(key)
        if val is not None:
            declared[key] = val
    nef = r.boolean("target_nef")
    if nef is not None:
        declared["target_nef"] = nef
    if r.raw("provenance") is not None:
        declared["provenance"] = r.raw("provenance")
    if map_name is None:
        for key in ("eta0_pairing", "ky_pairing", "target_nef"):
            if key not in declared:
                raise ConfigInvalid(f"[{section}] a declared target needs {key!r}", key=key,
                                    line=lines[1].get(section))
    return Scenario(target=target, map=map_name, checks=("flow",), declared=declared, **common)


def _check_map(reader, map_name, source, target):
    try:
        resolve_map(map_name, resolve(source)[0], resolve(target)[0])
    except HolocurvError as exc:
        reader.fail("map", f"[{reader.section}] map {map_name!r}: {exc}")


def parse_scenarios(text):
    """Parse scenario text into a list of :class:`Scenario` in file order."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       default_section="__defaults__")
    try:
        parser.read_string(text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigInvalid(f"duplicate section [{exc.section}]", line=exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigInvalid(f"duplicate key {exc.option!r} in [{exc.section}]", key=exc.option,
                            line=exc.lineno) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigInvalid("content before the first section header", line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigInvalid(f"unparsable line: {exc.errors[0][1].strip() if exc.errors else ''}",
                            line=line) from exc
    lines = _line_index(text)
    if not parser.sections():
        raise ConfigInvalid("no scenario sections found")
    return [_parse_section(s, dict(parser[s]), lines) for s in parser.sections()]


def load_scenarios(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read scenario file {path}: {exc.strerror}") from exc
    return parse_scenarios(text)

"""Key-value config files and the tiny arithmetic expression grammar.

Config files are flat ``key = value`` text with one section per experiment
(INI style).  Values may be plain numbers or small arithmetic expressions
over previously-defined identifiers, e.g. ``a = pow(log(T), -2)``.  The
grammar is numbers, ``+ - * /``, unary minus, parentheses, ``pow(x, y)``,
``log(x)`` and identifiers.  Environment variables with the prefix
``MDLAB_<SECTION>_<KEY>`` override file values.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
import re
from typing import Mapping, Optional

from .domains import ParamSchedule

__all__ = [
    "ConfigError",
    "evaluate_expression",
    "read_config",
    "schedule_from_mapping",
    "config_hash",
]

ENV_PREFIX = "MDLAB"


class ConfigError(ValueError):
    """Malformed config file or expression."""


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/(),]))"
)

_FUNCTIONS = {
    "log": (1, math.log),
    "pow": (2, math.pow),
}


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ConfigError(f"bad character in expression at {text[pos:]!r}")
        pos = m.end()
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num"))))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
    return tokens


class _Parser:
    def __init__(self, tokens, variables):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val = self.next()
        if kind != "op" or val != op:
            raise ConfigError(f"expected {op!r}, got {val!r}")

    def parse(self) -> float:
        value = self.expr()
        if self.pos != len(self.tokens):
            raise ConfigError(f"trailing tokens: {self.tokens[self.pos:]!r}")
        return value

    def expr(self) -> float:
        value = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.next()
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.next()
            rhs = self.unary()
            value = value * rhs if op == "*" else value / rhs
        return value

    def unary(self) -> float:
        if self.peek() == ("op", "-"):
            self.next()
            return -self.unary()
        return self.primary()

    def primary(self) -> float:
        kind, val = self.next()
        if kind == "num":
            return val
        if kind == "ident":
            if self.peek() == ("op", "("):
                if val not in _FUNCTIONS:
                    raise ConfigError(f"unknown function {val!r}")
                arity, fn = _FUNCTIONS[val]
                self.expect_op("(")
                args = [self.expr()]
                while self.peek() == ("op", ","):
                    self.next()
                    args.append(self.expr())
                self.expect_op(")")
                if len(args) != arity:
                    raise ConfigError(f"{val} takes {arity} argument(s), got {len(args)}")
                return fn(*args)
            if val not in self.variables:
                raise ConfigError(f"unknown identifier {val!r}")
            return float(self.variables[val])
        if kind == "op" and val == "(":
            value = self.expr()
            self.expect_op(")")
            return value
        raise ConfigError(f"unexpected token {val!r}")


def evaluate_expression(text: str, variables: Optional[Mapping] = None) -> float:
    """Evaluate an arithmetic expression over the given identifier values."""
    tokens = _tokenize(text)
    if not tokens:
        raise ConfigError("empty expression")
    return _Parser(tokens, dict(variables or {})).parse()


def read_config(path: str) -> dict:
    """Read an INI-style config into {section: {key: raw string}}.

    Environment variables ``MDLAB_<SECTION>_<KEY>`` override file entries.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    if parser.defaults():
        sections.setdefault("DEFAULT", {}).update(parser.defaults())
    for name, mapping in sections.items():
        for key in list(mapping):
            env_key = f"{ENV_PREFIX}_{name.upper()}_{key.upper()}"
            if env_key in os.environ:
                mapping[key] = os.environ[env_key]
    return sections


_SCHEDULE_KEYS = ("a", "b", "c", "zeta", "theta1", "theta2", "T")


def schedule_from_mapping(mapping: Mapping) -> ParamSchedule:
    """Build a ParamSchedule from config keys a, b, c, zeta, theta1, theta2, T.

    T is resolved first so the other entries may reference it, e.g.
    ``a = pow(log(T), -2)``.  Unknown keys are rejected.
    """
    unknown = set(mapping) - set(_SCHEDULE_KEYS)
    if unknown:
        raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
    if "T" not in mapping:
        raise ConfigError("schedule requires T")
    values = {"T": evaluate_expression(str(mapping["T"]), {})}
    defaults = {"zeta": 1.0, "theta1": 1.0, "theta2": 1.0}
    for key in ("a", "b", "c", "zeta", "theta1", "theta2"):
        if key in mapping:
            values[key] = evaluate_expression(str(mapping[key]), {"T": values["T"]})
        elif key in defaults:
            values[key] = defaults[key]
        else:
            raise ConfigError(f"schedule requires {key}")
    return ParamSchedule(
        a=values["a"],
        b=values["b"],
        c=values["c"],
        T=values["T"],
        zeta=values["zeta"],
        theta1=values["theta1"],
        theta2=values["theta2"],
    )


def config_hash(obj) -> str:
    """Stable short hash of a JSON-serializable config object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

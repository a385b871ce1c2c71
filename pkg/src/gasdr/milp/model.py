"""Linear model container over continuous and binary variables.

The model is always a minimization. A plain-text LP dump is available via
:meth:`MilpModel.to_lp_string` for cross-checking with external solvers; the
grammar is::

    \\ comment line
    Minimize
     obj: <term> <term> ... [<+|-> <constant>]
    Subject To
     <row name>: <term> <term> ... <= | = | >= <rhs>
    Bounds
     <lb> <= <var> <= <ub>          (lb may be -inf, ub may be +inf)
     <var> free
    Binaries
     <var> <var> ...
    End

where ``<term>`` is ``<+|-> <coefficient> <var>`` and every number is written
in shortest round-trip decimal form. Variable and row names contain no
whitespace or colons and do not start with a digit, sign or period.
Every variable appears in ``Bounds``; ``Binaries`` may be empty.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from ..errors import ValidationError

CONTINUOUS = "continuous"
BINARY = "binary"
SENSES = ("<=", "=", ">=")

_NAME_RE = re.compile(r"^[^\s:0-9+\-.][^\s:]*$")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    indices: np.ndarray
    coefs: np.ndarray
    sense: str
    rhs: float


@dataclass(frozen=True)
class CompiledModel:
    """Array form of a model: ``min c@x + c0`` s.t. row senses and bounds."""

    c: np.ndarray
    c0: float
    A: sp.csr_matrix
    senses: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binaries: np.ndarray  # indices of binary variables


class MilpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self._by_name: dict[str, int] = {}
        self._compiled = None

    # -- construction -------------------------------------------------
    def add_variable(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0,
                     ub: float = math.inf) -> int:
        if kind not in (CONTINUOUS, BINARY):
            raise ValidationError(f"unknown variable kind {kind!r}")
        if name in self._by_name:
            raise ValidationError(f"duplicate variable name {name!r}")
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub) or lb > ub or lb == math.inf or ub == -math.inf:
            raise ValidationError(f"invalid bounds [{lb}, {ub}] for {name!r}")
        if kind == BINARY and not (0.0 <= lb <= ub <= 1.0):
            raise ValidationError(f"binary {name!r} needs bounds within [0, 1], got [{lb}, {ub}]")
        self.variables.append(Variable(name, kind, lb, ub))
        self._by_name[name] = len(self.variables) - 1
        self._compiled = None
        return len(self.variables) - 1

    def add_binary(self, name: str) -> int:
        return self.add_variable(name, BINARY, 0.0, 1.0)

    def add_constraint(self, terms, sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in SENSES:
            raise ValidationError(f"unknown relation {sense!r}")
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ValidationError("constraint right-hand side must be finite")
        idx, coefs = self._terms(terms)
        row = len(self.constraints)
        self.constraints.append(Constraint(name or f"r{row}", idx, coefs, sense, rhs))
        self._compiled = None
        return row

    def set_objective(self, terms, constant: float = 0.0) -> None:
        idx, coefs = self._terms(terms)
        if not math.isfinite(constant):
            raise ValidationError("objective constant must be finite")
        self.objective = {int(i): float(v) for i, v in zip(idx, coefs)}
        self.objective_constant = float(constant)
        self._compiled = None

    def _terms(self, terms):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[int, float] = {}
        for i, v in items:
            i = int(i)
            v = float(v)
            if not 0 <= i < len(self.variables):
                raise ValidationError(f"term references undeclared variable index {i}")
            if not math.isfinite(v):
                raise ValidationError(f"non-finite coefficient {v} on {self.variables[i].name!r}")
            acc[i] = acc.get(i, 0.0) + v
        idx = np.fromiter(acc.keys(), dtype=np.int64, count=len(acc))
        vals = np.fromiter(acc.values(), dtype=float, count=len(acc))
        order = np.argsort(idx, kind="stable")
        return idx[order], vals[order]

    # -- queries --------------------------------------------------------
    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def index(self, name: str) -> int:
        return self._by_name[name]

    @property
    def binary_indices(self) -> np.ndarray:
        return np.array([i for i, v in enumerate(self.variables) if v.kind == BINARY], dtype=np.int64)

    def compile(self) -> CompiledModel:
        if self._compiled is not None:
            return self._compiled
        n = len(self.variables)
        c = np.zeros(n)
        for i, v in self.objective.items():
            c[i] = v
        rows, cols, vals = [], [], []
        for r, con in enumerate(self.constraints):
            rows.append(np.full(len(con.indices), r, dtype=np.int64))
            cols.append(con.indices)
            vals.append(con.coefs)
        m = len(self.constraints)
        if m:
            A = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, n)
            )
        else:
            A = sp.csr_matrix((0, n))
        sense_code = {"<=": -1, "=": 0, ">=": 1}
        self._compiled = CompiledModel(
            c=c,
            c0=self.objective_constant,
            A=A,
            senses=np.array([sense_code[con.sense] for con in self.constraints], dtype=np.int8),
            rhs=np.array([con.rhs for con in self.constraints], dtype=float),
            lb=np.array([v.lb for v in self.variables], dtype=float),
            ub=np.array([v.ub for v in self.variables], dtype=float),
            binaries=self.binary_indices,
        )
        return self._compiled

    def evaluate(self, x) -> float:
        cm = self.compile()
        return float(cm.c @ np.asarray(x, dtype=float) + cm.c0)

    def max_violation(self, x) -> float:
        """Largest bound or row violation of assignment ``x`` (0 if feasible)."""
        cm = self.compile()
        x = np.asarray(x, dtype=float)
        viol = max(0.0, float(np.max(cm.lb - x, initial=0.0)), float(np.max(x - cm.ub, initial=0.0)))
        if cm.A.shape[0]:
            act = cm.A @ x - cm.rhs
            viol = max(
                viol,
                float(np.max(np.where(cm.senses <= 0, act, -np.inf), initial=0.0)),
                float(np.max(np.where(cm.senses >= 0, -act, -np.inf), initial=0.0)),
            )
        return viol

    # -- text dump --------------------------------------------------------
    def to_lp_string(self) -> str:
        for v in self.variables:
            _check_name(v.name)
        out = [f"\\ model: {self.name}", "Minimize"]
        obj = " obj:" + _fmt_terms(self, self.objective.items())
        if self.objective_constant:
            obj += f" {_signed(self.objective_constant)}"
        out.append(obj)
        out.append("Subject To")
        for con in self.constraints:
            _check_name(con.name)
            out.append(f" {con.name}:{_fmt_terms(self, zip(con.indices, con.coefs))} {con.sense} {_num(con.rhs)}")
        out.append("Bounds")
        for v in self.variables:
            if v.lb == -math.inf and v.ub == math.inf:
                out.append(f" {v.name} free")
            else:
                out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
        out.append("Binaries")
        bins = [v.name for v in self.variables if v.kind == BINARY]
        if bins:
            out.append(" " + " ".join(bins))
        out.append("End")
        return "\n".join(out) + "\n"

    def write_lp(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp_string())

    @classmethod
    def from_lp_string(cls, text: str) -> "MilpModel":
        """Parse the dump format written by :meth:`to_lp_string`."""
        lines = [ln.strip() for ln in text.splitlines()]
        name = "model"
        sections: dict[str, list[str]] = {}
        current = None
        for ln in lines:
            if not ln:
                continue
            if ln.startswith("\\"):
                if ln.startswith("\\ model:"):
                    name = ln.split(":", 1)[1].strip()
                continue
            if ln in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
                current = ln
                sections.setdefault(current, [])
                continue
            if current is None:
                raise ValidationError(f"content outside any section: {ln!r}")
            sections[current].append(ln)

        binaries = set()
        for ln in sections.get("Binaries", []):
            binaries.update(ln.split())
        model = cls(name)
        for ln in sections.get("Bounds", []):
            tok = ln.split()
            if len(tok) == 2 and tok[1] == "free":
                model.add_variable(tok[0], CONTINUOUS, -math.inf, math.inf)
            elif len(tok) == 5 and tok[1] == "<=" and tok[3] == "<=":
                kind = BINARY if tok[2] in binaries else CONTINUOUS
                model.add_variable(tok[2], kind, float(tok[0]), float(tok[4]))
            else:
                raise ValidationError(f"bad bounds line {ln!r}")

        def parse_terms(tokens):
            terms, const = [], 0.0
            i = 0
            while i < len(tokens):
                sign = -1.0 if tokens[i] == "-" else 1.0
                if tokens[i] not in ("+", "-"):
                    raise ValidationError(f"expected sign, got {tokens[i]!r}")
                value = float(tokens[i + 1])
                if i + 2 < len(tokens) and tokens[i + 2] not in ("+", "-"):
                    terms.append((model.index(tokens[i + 2]), sign * value))
                    i += 3
                else:
                    const += sign * value
                    i += 2
            return terms, const

        obj = sections.get("Minimize", [" obj:"])[0]
        terms, const = parse_terms(obj.split(":", 1)[1].split())
        model.set_objective(terms, const)
        for ln in sections.get("Subject To", []):
            rname, body = ln.split(":", 1)
            tok = body.split()
            terms, _ = parse_terms(tok[:-2])
            model.add_constraint(terms, tok[-2], float(tok[-1]), name=rname.strip())
        return model


def _check_name(name: str) -> None:
    if not _NAME_RE.match(name):
        raise ValidationError(f"name {name!r} cannot be written in LP format")


def _num(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return repr(float(v))


def _signed(v: float) -> str:
    return f"- {_num(-v)}" if v < 0 or (v == 0 and math.copysign(1, v) < 0) else f"+ {_num(v)}"


def _fmt_terms(model: MilpModel, items: Iterable) -> str:
    parts = [f" {_signed(float(v))} {model.variables[int(i)].name}" for i, v in items]
    return "".join(parts)

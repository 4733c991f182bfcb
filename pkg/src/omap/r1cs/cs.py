"""Rank-1 constraint systems over the proof field.

Variables are numbered with 0 fixed to the constant one, then the public
inputs, then auxiliary (witness) variables.  Each auxiliary variable is
either a named private input or is *derived* from earlier variables; the
derivation rule is what the prover runs to fill in an assignment.

A system is split into segments.  Constraints in a segment only reference
variables from the same or earlier segments, which lets the prover refill
and recheck the tail of an assignment without redoing the whole thing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from ..fieldhash import P

ONE = 0


class LC:
    """Sparse linear combination ``sum(coeff * w[var])``."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, int] | None = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def of(x: "LC | int") -> "LC":
        if isinstance(x, LC):
            return x
        x %= P
        return LC({ONE: x}) if x else LC()

    @staticmethod
    def var(i: int) -> "LC":
        return LC({i: 1})

    def __add__(self, other: "LC | int") -> "LC":
        other = LC.of(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            nv = (t.get(k, 0) + v) % P
            if nv:
                t[k] = nv
            else:
                t.pop(k, None)
        return LC(t)

    __radd__ = __add__

    def __neg__(self) -> "LC":
        return LC({k: (-v) % P for k, v in self.terms.items()})

    def __sub__(self, other: "LC | int") -> "LC":
        return self + (-LC.of(other))

    def __rsub__(self, other: "LC | int") -> "LC":
        return LC.of(other) - self

    def __mul__(self, c: int) -> "LC":
        if isinstance(c, LC):
            raise TypeError("LC * LC is not linear; use a multiplication gadget")
        c %= P
        return LC({k: v * c % P for k, v in self.terms.items()}) if c else LC()

    __rmul__ = __mul__

    def evaluate(self, w: list[int]) -> int:
        return sum(c * w[k] for k, c in self.terms.items()) % P

    def constant(self) -> int | None:
        """The value if this LC has no variable terms, else None."""
        if all(k == ONE for k in self.terms):
            return self.terms.get(ONE, 0)
        return None

    def expr(self) -> str:
        parts = []
        for k, c in sorted(self.terms.items()):
            neg = c > P // 2
            mag = P - c if neg else c
            if k == ONE:
                body = str(mag)
            elif mag == 1:
                body = f"w[{k}]"
            else:
                body = f"w[{k}]*{mag}"
            parts.append(("-" if neg else "+") + body)
        if not parts:
            return "0"
        s = "".join(parts)
        return s[1:] if s[0] == "+" else s

    def __repr__(self) -> str:
        return f"LC({self.expr()})"


@dataclass(frozen=True)
class Constraint:
    a: LC
    b: LC
    c: LC
    label: str = ""

    def holds(self, w: list[int]) -> bool:
        return (self.a.evaluate(w) * self.b.evaluate(w) - self.c.evaluate(w)) % P == 0


class UnsatisfiedError(Exception):
    def __init__(self, index: int, label: str = ""):
        super().__init__(f"constraint {index} unsatisfied ({label})" if label else f"constraint {index} unsatisfied")
        self.index = index
        self.label = label


class ConstraintSystem:
    def __init__(self):
        self._rules: list[tuple] = [("one",)]
        self.public_names: list[str] = []
        self.private_names: dict[str, int] = {}
        self.constraints: list[Constraint] = []
        # (first variable, first constraint) of every segment
        self.segments: list[tuple[int, int]] = [(0, 0)]
        self._compiled: CompiledSystem | None = None

    @property
    def num_vars(self) -> int:
        return len(self._rules)

    @property
    def num_public(self) -> int:
        return len(self.public_names)

    @property
    def num_aux(self) -> int:
        return self.num_vars - 1 - self.num_public

    def _new(self, rule: tuple) -> LC:
        self._compiled = None
        self._rules.append(rule)
        return LC.var(len(self._rules) - 1)

    def public(self, name: str) -> LC:
        if self.num_vars != 1 + self.num_public:
            raise ValueError("public inputs must be allocated before auxiliary variables")
        self.public_names.append(name)
        return self._new(("input", name))

    def private(self, name: str) -> LC:
        if name in self.private_names or name in self.public_names:
            raise ValueError(f"duplicate input name {name!r}")
        self.private_names[name] = self.num_vars
        return self._new(("input", name))

    def derived(self, fn: Callable[..., int] | None, *deps: LC) -> LC:
        """Auxiliary variable computed as ``fn(*values of deps)``.

        ``fn=None`` means the product of the two dependencies.
        """
        if fn is None and len(deps) != 2:
            raise ValueError("product rule needs exactly two operands")
        return self._new(("derived", fn, deps))

    def enforce(self, a: LC | int, b: LC | int, c: LC | int, label: str = "") -> None:
        self._compiled = None
        self.constraints.append(Constraint(LC.of(a), LC.of(b), LC.of(c), label))

    def segment(self) -> int:
        self.segments.append((self.num_vars, len(self.constraints)))
        return len(self.segments) - 1

    def _segment_bounds(self, k: int) -> tuple[int, int, int, int]:
        v0, c0 = self.segments[k]
        v1, c1 = self.segments[k + 1] if k + 1 < len(self.segments) else (self.num_vars, len(self.constraints))
        return v0, v1, c0, c1

    # -- interpreted path ---------------------------------------------------

    def solve(self, inputs: Mapping[str, int]) -> list[int]:
        w = [0] * self.num_vars
        for i, rule in enumerate(self._rules):
            kind = rule[0]
            if kind == "one":
                w[i] = 1
            elif kind == "input":
                w[i] = _field_input(inputs, rule[1])
            else:
                fn, deps = rule[1], rule[2]
                vals = [d.evaluate(w) for d in deps]
                w[i] = (vals[0] * vals[1] if fn is None else fn(*vals)) % P
        return w

    def first_unsatisfied(self, w: list[int], lo: int = 0, hi: int | None = None) -> int | None:
        hi = len(self.constraints) if hi is None else hi
        for i in range(lo, hi):
            if not self.constraints[i].holds(w):
                return i
        return None

    def is_satisfied(self, w: list[int]) -> bool:
        return self.first_unsatisfied(w) is None

    # -- compiled path --------------------------------------------------------

    def compile(self) -> "CompiledSystem":
        if self._compiled is None:
            self._compiled = CompiledSystem(self)
        return self._compiled


def _field_input(inputs: Mapping[str, int], name: str) -> int:
    x = inputs[name]
    if not isinstance(x, int) or not 0 <= x < P:
        raise ValueError(f"input {name!r} is not a field element")
    return x


class CompiledSystem:
    """Straight-line Python generated from a constraint system.

    Produces the same assignments and verdicts as the interpreted path,
    roughly an order of magnitude faster.

    Two checkers are generated per segment.  ``check`` evaluates every
    constraint.  ``check_solved`` skips constraints that hold by
    construction for assignments produced by the solver: those whose
    output variable *is* the product (or copy) the constraint states.  It
    must only be used on assignments the solver filled in.
    """

    def __init__(self, cs: ConstraintSystem):
        self.cs = cs
        self.num_vars = cs.num_vars
        self._fns: list[Callable] = []
        ns: dict = {"P": P, "F": self._fns}
        src = []
        self.solvers = []
        self.checkers = []
        self.solved_checkers = []
        self.implied = [self._is_implied(con) for con in cs.constraints]
        for k in range(len(cs.segments)):
            v0, v1, c0, c1 = cs._segment_bounds(k)
            src.append(self._solver_src(k, v0, v1))
            src.append(self._checker_src(f"check_{k}", c0, c1, skip_implied=False))
            src.append(self._checker_src(f"check_solved_{k}", c0, c1, skip_implied=True))
        exec(compile("\n".join(src), f"<r1cs:{id(cs):x}>", "exec"), ns)
        for k in range(len(cs.segments)):
            self.solvers.append(ns[f"solve_{k}"])
            self.checkers.append(ns[f"check_{k}"])
            self.solved_checkers.append(ns[f"check_solved_{k}"])
        self.input_slots = [(i, r[1]) for i, r in enumerate(cs._rules) if r[0] == "input"]

    def _is_implied(self, con: Constraint) -> bool:
        rules = self.cs._rules
        ct = con.c.terms
        if len(ct) == 1:
            (k, coeff), = ct.items()
            rule = rules[k]
            if coeff == 1 and k != ONE and rule[0] == "derived" and rule[1] is None:
                a, b = rule[2]
                return (a.terms == con.a.terms and b.terms == con.b.terms) or (
                    a.terms == con.b.terms and b.terms == con.a.terms)
        if con.b.constant() == 1 and not ct:
            # (v - x) * 1 = 0 with v defined as a copy of x
            for k, coeff in con.a.terms.items():
                rule = rules[k]
                if coeff == 1 and rule[0] == "derived" and rule[1] is _copy_marker():
                    rest = (con.a - LC.var(k)).terms
                    return {j: (-c) % P for j, c in rest.items()} == rule[2][0].terms
        return False

    def _solver_src(self, k: int, v0: int, v1: int) -> str:
        lines = [f"def solve_{k}(w, inp):"]
        temps: dict[str, str] = {}

        def operand(e: str) -> str:
            if e.startswith("w[") and e.endswith("]") and "w[" not in e[2:]:
                return e
            if e not in temps:
                if len(temps) > 256:
                    temps.clear()
                name = f"t{len(lines)}"
                lines.append(f"    {name} = {e}")
                temps[e] = name
            return temps[e]

        for i in range(v0, v1):
            rule = self.cs._rules[i]
            if rule[0] == "one":
                lines.append(f"    w[{i}] = 1")
            elif rule[0] == "input":
                lines.append(f"    w[{i}] = inp[{rule[1]!r}]")
            else:
                fn, deps = rule[1], rule[2]
                if fn is None:
                    a, b = (operand(d.expr()) for d in deps)
                    lines.append(f"    w[{i}] = {a}*{b} % P")
                elif fn is _copy_marker():
                    lines.append(f"    w[{i}] = ({deps[0].expr()}) % P")
                else:
                    self._fns.append(fn)
                    args = ", ".join(f"({d.expr()}) % P" for d in deps)
                    lines.append(f"    w[{i}] = F[{len(self._fns) - 1}]({args}) % P")
        lines.append("    return w")
        return "\n".join(lines)

    def _checker_src(self, name: str, c0: int, c1: int, skip_implied: bool) -> str:
        lines = [f"def {name}(w):"]
        for i in range(c0, c1):
            if skip_implied and self.implied[i]:
                continue
            con = self.cs.constraints[i]
            a, b, c = con.a.expr(), con.b.expr(), con.c.expr()
            if con.b.constant() == 1:
                test = f"(({a})-({c})) % P"
            else:
                test = f"(({a})*({b})-({c})) % P"
            lines.append(f"    if {test}: return {i}")
        lines.append("    return -1")
        return "\n".join(lines)

    def new_assignment(self) -> list[int]:
        return [0] * self.num_vars

    def solve(self, inputs: Mapping[str, int], w: list[int] | None = None, from_segment: int = 0) -> list[int]:
        for i, name in self.input_slots:
            _field_input(inputs, name)
        if w is None:
            w = self.new_assignment()
        for k in range(from_segment, len(self.solvers)):
            self.solvers[k](w, inputs)
        return w

    def solve_segment(self, k: int, w: list[int], inputs: Mapping[str, int]) -> None:
        self.solvers[k](w, inputs)

    def first_unsatisfied(self, w: list[int], segments: Iterable[int] | None = None, solved: bool = False) -> int | None:
        """First failing constraint index; ``solved=True`` only for solver output."""
        checkers = self.solved_checkers if solved else self.checkers
        for k in range(len(checkers)) if segments is None else segments:
            r = checkers[k](w)
            if r >= 0:
                return r
        return None


def copy_of(v: int) -> int:
    return v


def _copy_marker():
    return copy_of

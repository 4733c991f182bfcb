"""Line-oriented scenario scripts.

One action per line, ``#`` starts a comment.  A transaction-producing
action may end in ``-> accept`` or ``-> reject <reason>``; without a suffix
it is expected to be accepted.  Example::

    seed 7
    color green 3
    color red 2
    mint Alice green 5
    mint Bob red 9
    offer S1 Alice Bob give green 5 ask red 7 bt 4
    respond S1
    advance 4
    complete S1 split 3
    expect balance Alice red 7
"""

from __future__ import annotations

import random
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..r1cs.backend import setup
from .world import HarnessError, World

EXIT_OK, EXIT_EXPECTATION, EXIT_INVARIANT, EXIT_PARSE = 0, 1, 2, 3


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Step:
    lineno: int
    verb: str
    args: tuple
    expected: str | None = None
    # the command as written, whitespace-normalised
    text: str = ""


@dataclass
class Scenario:
    seed: int = 0
    depth: int = 16
    colors: dict[str, int] = field(default_factory=dict)
    steps: list[Step] = field(default_factory=list)


# verbs whose steps go through the ledger or prover and default to "accept"
_TX_VERBS = {
    "mint", "pay", "offer", "respond", "cancel", "complete", "replay", "double-spend",
    "self-collision", "forged-proof", "sibling-alone", "cancel-early", "respond-late",
    "withhold", "release",
}
_POLL_OUTCOMES = {"pending", "responded", "expired"}


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        v = int(tok, 0)
    except ValueError:
        raise ParseError(lineno, f"{what} must be an integer, got {tok!r}") from None
    if v < 0:
        raise ParseError(lineno, f"{what} must be non-negative")
    return v


class _Parser:
    def __init__(self):
        self.sc = Scenario()
        self.started = False

    def color(self, tok: str, lineno: int) -> int:
        if tok in self.sc.colors:
            return self.sc.colors[tok]
        if tok.isdigit():
            return int(tok)
        raise ParseError(lineno, f"unknown colour {tok!r}")

    def line(self, lineno: int, raw: str) -> None:
        text = raw.split("#", 1)[0].strip()
        if not text:
            return
        expected = None
        if "->" in text:
            text, _, exp = text.partition("->")
            text, expected = text.strip(), " ".join(exp.split())
            if not expected:
                raise ParseError(lineno, "empty expectation after '->'")
        try:
            toks = shlex.split(text)
        except ValueError as e:
            raise ParseError(lineno, str(e)) from None
        verb, rest = toks[0], toks[1:]
        handler = getattr(self, "do_" + verb.replace("-", "_"), None)
        if handler is None:
            raise ParseError(lineno, f"unknown action {verb!r}")
        if expected is not None:
            if verb == "poll":
                if expected not in _POLL_OUTCOMES:
                    raise ParseError(lineno, f"poll outcome must be one of {sorted(_POLL_OUTCOMES)}")
            elif verb not in _TX_VERBS:
                raise ParseError(lineno, f"{verb!r} takes no outcome")
            elif expected != "accept" and not expected.startswith("reject "):
                raise ParseError(lineno, "outcome must be 'accept' or 'reject <reason>'")
        elif verb in _TX_VERBS:
            expected = "accept"
        args = handler(rest, lineno)
        if args is not None:
            self.started = True
            self.sc.steps.append(Step(lineno, verb, tuple(args), expected, " ".join(toks)))

    def _arity(self, rest, n, lineno, usage):
        if len(rest) != n:
            raise ParseError(lineno, f"usage: {usage}")

    # -- directives (no step) -----------------------------------------------------

    def _header(self, lineno, name):
        if self.started:
            raise ParseError(lineno, f"{name!r} must come before the first action")

    def do_seed(self, rest, lineno):
        self._arity(rest, 1, lineno, "seed N")
        self._header(lineno, "seed")
        self.sc.seed = _int(rest[0], lineno, "seed")

    def do_depth(self, rest, lineno):
        self._arity(rest, 1, lineno, "depth D")
        self._header(lineno, "depth")
        d = _int(rest[0], lineno, "depth")
        if not 1 <= d <= 32:
            raise ParseError(lineno, "depth must be in 1..32")
        self.sc.depth = d

    def do_color(self, rest, lineno):
        self._arity(rest, 2, lineno, "color NAME ID")
        cid = _int(rest[1], lineno, "colour id")
        if cid == 0:
            raise ParseError(lineno, "colour 0 is reserved for dummy notes")
        self.sc.colors[rest[0]] = cid

    # -- actions ------------------------------------------------------------------------

    def do_party(self, rest, lineno):
        self._arity(rest, 1, lineno, "party NAME")
        return rest

    def do_mint(self, rest, lineno):
        self._arity(rest, 3, lineno, "mint PARTY COLOUR AMOUNT")
        return rest[0], self.color(rest[1], lineno), _int(rest[2], lineno, "amount")

    def do_pay(self, rest, lineno):
        self._arity(rest, 4, lineno, "pay FROM TO COLOUR AMOUNT")
        return rest[0], rest[1], self.color(rest[2], lineno), _int(rest[3], lineno, "amount")

    def do_offer(self, rest, lineno):
        usage = "offer SESSION INITIATOR COUNTERPARTY give COLOUR AMOUNT ask COLOUR AMOUNT bt HEIGHT"
        if len(rest) != 11 or rest[3] != "give" or rest[6] != "ask" or rest[9] != "bt":
            raise ParseError(lineno, f"usage: {usage}")
        give = (self.color(rest[4], lineno), _int(rest[5], lineno, "amount"))
        ask = (self.color(rest[7], lineno), _int(rest[8], lineno, "amount"))
        return rest[0], rest[1], rest[2], give, ask, _int(rest[10], lineno, "bt")

    def do_respond(self, rest, lineno):
        if len(rest) not in (1, 3) or (len(rest) == 3 and rest[1] != "with"):
            raise ParseError(lineno, "usage: respond SESSION [with VALUE]")
        return rest[0], _int(rest[2], lineno, "value") if len(rest) == 3 else None

    def _session_only(self, rest, lineno, verb):
        self._arity(rest, 1, lineno, f"{verb} SESSION")
        return rest

    def do_cancel(self, rest, lineno):
        return self._session_only(rest, lineno, "cancel")

    def do_poll(self, rest, lineno):
        return self._session_only(rest, lineno, "poll")

    def do_complete(self, rest, lineno):
        if len(rest) not in (1, 3) or (len(rest) == 3 and rest[1] != "split"):
            raise ParseError(lineno, "usage: complete SESSION [split AMOUNT]")
        return rest[0], _int(rest[2], lineno, "split") if len(rest) == 3 else None

    def do_advance(self, rest, lineno):
        if len(rest) > 1:
            raise ParseError(lineno, "usage: advance [N]")
        return (_int(rest[0], lineno, "blocks") if rest else 1,)

    def do_replay(self, rest, lineno):
        self._arity(rest, 0, lineno, "replay")
        return ()

    def _party_only(self, rest, lineno, verb):
        self._arity(rest, 1, lineno, f"{verb} PARTY")
        return rest

    def do_double_spend(self, rest, lineno):
        return self._party_only(rest, lineno, "double-spend")

    def do_self_collision(self, rest, lineno):
        return self._party_only(rest, lineno, "self-collision")

    def do_forged_proof(self, rest, lineno):
        return self._party_only(rest, lineno, "forged-proof")

    def do_sibling_alone(self, rest, lineno):
        return self._session_only(rest, lineno, "sibling-alone")

    def do_cancel_early(self, rest, lineno):
        return self._session_only(rest, lineno, "cancel-early")

    def do_respond_late(self, rest, lineno):
        return self._session_only(rest, lineno, "respond-late")

    def do_withhold(self, rest, lineno):
        return self._session_only(rest, lineno, "withhold")

    def do_release(self, rest, lineno):
        return self._session_only(rest, lineno, "release")

    def do_expect(self, rest, lineno):
        if rest[:1] == ["balance"] and len(rest) == 4:
            return "balance", rest[1], self.color(rest[2], lineno), _int(rest[3], lineno, "amount")
        if rest[:1] == ["state"] and len(rest) in (3, 4):
            role = rest[2] if len(rest) == 4 else "initiator"
            if role not in ("initiator", "counterparty"):
                raise ParseError(lineno, "role must be initiator or counterparty")
            return "state", rest[1], role, rest[-1]
        raise ParseError(lineno, "usage: expect balance PARTY COLOUR AMOUNT | expect state SESSION [ROLE] STATE")


def parse_scenario(text: str) -> Scenario:
    p = _Parser()
    for lineno, raw in enumerate(text.splitlines(), 1):
        p.line(lineno, raw)
    return p.sc


@dataclass
class ScenarioResult:
    trace: list[str]
    failures: list[str]
    violations: list[str]
    world: World | None = None

    @property
    def exit_code(self) -> int:
        if self.violations:
            return EXIT_INVARIANT
        if self.failures:
            return EXIT_EXPECTATION
        return EXIT_OK

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace)


def _perform(world: World, step: Step) -> str:
    a = step.args
    actions: dict[str, Callable[[], str]] = {
        "party": lambda: (world.party(a[0]), "ok")[1],
        "mint": lambda: world.mint(*a),
        "pay": lambda: world.pay(*a),
        "offer": lambda: world.offer(*a, secret=world.rng.randbytes(32)),
        "respond": lambda: world.respond(*a),
        "cancel": lambda: world.cancel(*a),
        "poll": lambda: world.poll(*a),
        "complete": lambda: world.complete(*a),
        "advance": lambda: f"ok h={world.advance(*a)}",
        "replay": world.attempt_replay,
        "double-spend": lambda: world.attempt_double_spend(*a),
        "self-collision": lambda: world.attempt_self_collision(*a),
        "forged-proof": lambda: world.attempt_forged_proof(*a),
        "sibling-alone": lambda: world.attempt_sibling_alone(*a),
        "cancel-early": lambda: world.attempt_cancel_early(*a),
        "respond-late": lambda: world.attempt_respond_late(*a),
        "withhold": lambda: world.withhold_response(*a),
        "release": lambda: world.release_response(*a),
    }
    return actions[step.verb]()


def _check_expect(world: World, step: Step) -> tuple[str, str | None]:
    kind, *rest = step.args
    if kind == "balance":
        name, color, want = rest
        got = world.balance(name, color)
        return f"{got}", None if got == want else f"balance of {name} in colour {color} is {got}, expected {want}"
    sid, role, want = rest
    ex = world.exchange(sid)
    s = ex.initiator if role == "initiator" else ex.counterparty
    got = s.state.value
    return got, None if got.lower() == want.lower() else f"{sid} {role} state is {got}, expected {want}"


def run_scenario(sc: Scenario | str, depth: int | None = None, verbose: bool = False) -> ScenarioResult:
    """Execute a scenario against a fresh ledger.

    ``depth`` overrides the script's own depth directive.  Stops at the
    first invariant violation; expectation mismatches are collected.
    """
    if isinstance(sc, str):
        sc = parse_scenario(sc)
    rng = random.Random(sc.seed)
    params = setup(rng, depth or sc.depth)
    trace: list[str] = []
    world = World(params, rng, emit=(trace.append if verbose else (lambda line: None)))
    failures: list[str] = []
    violations: list[str] = []
    for i, step in enumerate(sc.steps, 1):
        if step.verb == "expect":
            try:
                got, err = _check_expect(world, step)
            except HarnessError as e:
                got, err = "error", f"{e}"
            trace.append(f"{i:04d} {step.text} : {got}")
        else:
            try:
                outcome = _perform(world, step)
            except HarnessError as e:
                outcome = f"error {e}"
            err = None
            if step.expected is not None and outcome != step.expected:
                err = f"got {outcome!r}, expected {step.expected!r}"
            led = world.ledger
            trace.append(f"{i:04d} h={led.block_n} {step.text} -> {outcome} "
                         f"root={led.root.hex()[-16:]} leaves={len(led.tree)}")
        if err:
            failures.append(f"step {i} (line {step.lineno}): {err}")
            trace.append(f"     FAIL {err}")
        bad = world.violations()
        if bad:
            violations.extend(f"step {i} (line {step.lineno}): {v}" for v in bad)
            trace.extend(f"     INVARIANT {v}" for v in bad)
            break
    return ScenarioResult(trace, failures, violations, world)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())

"""Protocol programs: the alternating sequence of local steps and exchanges.

A program is an ordered list of steps over named wires. Every program that
touches private inputs starts with a Close step (sharing the inputs) and
ends with an Open step (recombining the result); additions are local while
every multiplication costs one communication round for degree reduction.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Close:
    """All parties share their private input; defines wires in_1 .. in_n."""


@dataclass(frozen=True, slots=True)
class AddLocal:
    left: str
    right: str
    out: str


@dataclass(frozen=True, slots=True)
class MulRound:
    left: str
    right: str
    out: str


@dataclass(frozen=True, slots=True)
class Open:
    target: str


def input_wire(party_id):
    return f"in_{party_id}"


class ProgramError(ValueError):
    """Malformed protocol program."""


class ProtocolProgram:
    """A validated step sequence for n parties."""

    def __init__(self, steps, n):
        if n < 2:
            raise ProgramError("need at least two parties")
        steps = tuple(steps)
        if not steps or not isinstance(steps[0], Close):
            raise ProgramError("first step must be Close")
        if not isinstance(steps[-1], Open):
            raise ProgramError("last step must be Open")
        defined = {input_wire(i) for i in range(1, n + 1)}
        for step in steps[1:]:
            if isinstance(step, Close):
                raise ProgramError("Close may only appear once, first")
            if isinstance(step, (AddLocal, MulRound)):
                for operand in (step.left, step.right):
                    if operand not in defined:
                        raise ProgramError(f"undefined operand wire {operand!r}")
                defined.add(step.out)
            elif isinstance(step, Open):
                if step.target not in defined:
                    raise ProgramError(f"undefined open target {step.target!r}")
        if sum(isinstance(s, Open) for s in steps) != 1:
            raise ProgramError("exactly one Open step expected")
        self.steps = steps
        self.n = n

    @property
    def m(self):
        """Total step count."""
        return len(self.steps)

    @property
    def communication_rounds(self):
        """Close and Open cost one round each, every MulRound one more."""
        return 2 + sum(isinstance(s, MulRound) for s in self.steps)

    def plaintext_result(self, inputs):
        """Oracle evaluation on plaintext field elements keyed by party id."""
        wires = {input_wire(i): v for i, v in inputs.items()}
        result = None
        for step in self.steps:
            if isinstance(step, AddLocal):
                wires[step.out] = wires[step.left] + wires[step.right]
            elif isinstance(step, MulRound):
                wires[step.out] = wires[step.left] * wires[step.right]
            elif isinstance(step, Open):
                result = wires[step.target]
        return result

    def __repr__(self):
        return f"ProtocolProgram(n={self.n}, steps={len(self.steps)})"


def _fold(n, make_step):
    steps = [Close()]
    acc = input_wire(1)
    for k in range(2, n + 1):
        out = f"acc_{k - 1}"
        steps.append(make_step(acc, input_wire(k), out))
        acc = out
    steps.append(Open(acc))
    return steps


def build_sum_program(cfg):
    """Close, n-1 local additions, Open: exactly two communication rounds."""
    return ProtocolProgram(_fold(cfg.n, AddLocal), cfg.n)


def build_product_program(cfg):
    """Close, a left fold of n-1 multiplication rounds, Open."""
    return ProtocolProgram(_fold(cfg.n, MulRound), cfg.n)


def plan_kind(text):
    """Protocol kind ('sum' or 'product') described by a textual plan.

    One lowercase keyword per line: `close`, then exactly one of `add` or
    `mul` (folding all n inputs), then `open`. Blank lines and `#` comments
    are ignored.
    """
    words = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        word = line.split("#", 1)[0].strip().lower()
        if not word:
            continue
        if word not in ("close", "add", "mul", "open"):
            raise ProgramError(f"line {lineno}: unknown step {word!r}")
        words.append(word)
    if len(words) != 3 or words[0] != "close" or words[-1] != "open":
        raise ProgramError(
            "plan must be: close, then one of add|mul, then open"
        )
    return "sum" if words[1] == "add" else "product"


def program_from_plan(text, cfg):
    """Build a program from the tiny textual plan format (see plan_kind)."""
    if plan_kind(text) == "sum":
        return build_sum_program(cfg)
    return build_product_program(cfg)

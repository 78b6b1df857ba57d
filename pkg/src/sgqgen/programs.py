"""The question-program DSL: parsing, validation, serialization, anonymization.

Text format, one step per line:

    1 = Find(table)
    2 = Filter(@1, wood)
    3 = Find(book)
    4 = WithRelation(@3, @2, on)
    5 = GroupByImages(@4)
    6 = KeepIfValuesCountEq(@5, 2)
    7 = Count(@6)

"@label" references an earlier step. Quantifier steps take a braced
sub-program with one bound object variable whose last step is its value:

    3 = All(@1, {x| s1 = Find(jeans); s2 = WithRelation(x, @s1, wearing); s3 = Exists(@s2)})

References are strictly backward; the final step must produce a boolean,
number, or label.
"""

from __future__ import annotations

from dataclasses import dataclass

PLACEHOLDER = "▢"  # anonymization placeholder

# value types
SET, GROUPS, VALUES, IMAGES, OBJECT, NUMBER, BOOLEAN, LABEL = (
    "set",
    "groups",
    "values",
    "images",
    "object",
    "number",
    "boolean",
    "label",
)
COUNTABLE = (SET, GROUPS, VALUES, IMAGES)
SCALAR = (NUMBER, LABEL)
FINAL_TYPES = (BOOLEAN, NUMBER, LABEL)

# literal kinds; all but "num" anonymize to the placeholder
NAME, ATTR, REL, ATTRNAME, MODNAME, NUM = "name", "attr", "rel", "attrname", "modname", "num"
WORD_KINDS = (NAME, ATTR, REL, ATTRNAME, MODNAME)


@dataclass(frozen=True)
class Ref:
    label: str


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Literal:
    value: object  # str for words, int for numbers


@dataclass(frozen=True)
class Step:
    label: str
    op: str
    args: tuple


@dataclass(frozen=True)
class SubProgram:
    var: str
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class Program:
    steps: tuple[Step, ...]

    def last_label(self) -> str:
        return self.steps[-1].label


@dataclass(frozen=True)
class OpSpec:
    params: tuple  # type names and literal kinds, positionally
    result: str
    variadic_pairs: tuple | None = None  # e.g. (MODNAME, SET) appended 0+ times


OPS: dict[str, OpSpec] = {
    "Find": OpSpec((NAME,), SET),
    "Filter": OpSpec((SET, ATTR), SET),
    "Count": OpSpec((COUNTABLE,), NUMBER),
    "Exists": OpSpec((SET,), BOOLEAN),
    "WithRelation": OpSpec((SET, SET, REL), SET, variadic_pairs=(MODNAME, SET)),
    "WithRelationObject": OpSpec((SET, SET, REL), SET, variadic_pairs=(MODNAME, SET)),
    "RelatedObjects": OpSpec((SET, REL), SET),
    "GroupByImages": OpSpec((SET,), GROUPS),
    "KeepIfValuesCountEq": OpSpec((GROUPS, NUM), GROUPS),
    "KeepIfValuesCountGt": OpSpec((GROUPS, NUM), GROUPS),
    "KeepIfValuesCountLt": OpSpec((GROUPS, NUM), GROUPS),
    "All": OpSpec((SET, "sub"), BOOLEAN),
    "Some": OpSpec((SET, "sub"), BOOLEAN),
    "None": OpSpec((SET, "sub"), BOOLEAN),
    "Unique": OpSpec((SET,), OBJECT),
    "UniqueImages": OpSpec((SET,), IMAGES),
    "QueryName": OpSpec((OBJECT,), LABEL),
    "QueryAttribute": OpSpec((OBJECT, ATTRNAME), LABEL),
    "VerifyAttribute": OpSpec((OBJECT, ATTR), BOOLEAN),
    "UniqueAttributeValues": OpSpec((SET, ATTRNAME), VALUES),
    "ChooseAttr": OpSpec((OBJECT, ATTR, ATTR), LABEL),
    "ChooseName": OpSpec((OBJECT, REL, NAME, NAME), LABEL),
    "ChooseRel": OpSpec((OBJECT, SET, REL, REL), LABEL),
    "And": OpSpec((BOOLEAN, BOOLEAN), BOOLEAN),
    "Or": OpSpec((BOOLEAN, BOOLEAN), BOOLEAN),
    "eq": OpSpec((SCALAR, SCALAR), BOOLEAN),
    "gt": OpSpec((NUMBER, NUMBER), BOOLEAN),
    "lt": OpSpec((NUMBER, NUMBER), BOOLEAN),
    "geq": OpSpec((NUMBER, NUMBER), BOOLEAN),
    "leq": OpSpec((NUMBER, NUMBER), BOOLEAN),
}


class ProgramError(Exception):
    """Base for program parsing/validation failures; names the step."""

    def __init__(self, step: str, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


class ProgramSyntaxError(ProgramError):
    pass


class UnknownOperatorError(ProgramError):
    pass


class ArityError(ProgramError):
    pass


class ForwardReferenceError(ProgramError):
    pass


class TypeMismatchError(ProgramError):
    pass


# ---------------------------------------------------------------------------
# parsing


def parse_program(text: str) -> Program:
    steps = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        steps.append(_parse_step(line, str(line_no)))
    if not steps:
        raise ProgramSyntaxError("1", "empty program")
    program = Program(tuple(steps))
    validate_program(program)
    return program


def _parse_step(text: str, where: str) -> Step:
    if "=" not in text:
        raise ProgramSyntaxError(where, f"expected 'label = Op(...)', got {text!r}")
    label, rhs = text.split("=", 1)
    label = label.strip()
    rhs = rhs.strip()
    if not label:
        raise ProgramSyntaxError(where, "missing step label")
    open_pos = rhs.find("(")
    if open_pos <= 0 or not rhs.endswith(")"):
        raise ProgramSyntaxError(label, f"expected 'Op(args)', got {rhs!r}")
    op = rhs[:open_pos].strip()
    body = rhs[open_pos + 1 : -1]
    args = tuple(_parse_arg(tok.strip(), label) for tok in _split_args(body, label))
    return Step(label, op, args)


def _split_args(body: str, where: str) -> list[str]:
    if not body.strip():
        return []
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
            if depth < 0:
                raise ProgramSyntaxError(where, "unbalanced brackets in arguments")
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    if depth != 0:
        raise ProgramSyntaxError(where, "unbalanced brackets in arguments")
    parts.append(body[start:])
    return parts


def _parse_arg(token: str, where: str):
    if not token:
        raise ProgramSyntaxError(where, "empty argument")
    if token.startswith("@"):
        label = token[1:].strip()
        if not label:
            raise ProgramSyntaxError(where, "empty step reference")
        return Ref(label)
    if token.startswith("{"):
        if not token.endswith("}"):
            raise ProgramSyntaxError(where, "unterminated sub-program")
        return _parse_subprogram(token[1:-1], where)
    if token.lstrip("-").isdigit():
        return Literal(int(token))
    return Literal(token)


def _parse_subprogram(body: str, where: str) -> SubProgram:
    if "|" not in body:
        raise ProgramSyntaxError(where, "sub-program must look like {x| ...}")
    var, rest = body.split("|", 1)
    var = var.strip()
    if not var or not var.isidentifier():
        raise ProgramSyntaxError(where, f"bad bound variable {var!r}")
    steps = []
    for part in _split_steps(rest, where):
        part = part.strip()
        if part:
            steps.append(_bind_var(_parse_step(part, where), var))
    if not steps:
        raise ProgramSyntaxError(where, "empty sub-program")
    return SubProgram(var, tuple(steps))


def _bind_var(step: Step, var: str) -> Step:
    """Turn bare uses of the bound variable name into variable references.
    Within its block the variable shadows any same-named vocabulary word."""
    args = tuple(
        VarRef(var) if isinstance(a, Literal) and a.value == var else a for a in step.args
    )
    return Step(step.label, step.op, args)


def _split_steps(body: str, where: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        elif ch == ";" and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    parts.append(body[start:])
    return parts


# ---------------------------------------------------------------------------
# validation


def validate_program(program: Program) -> None:
    env: dict[str, str] = {}
    for step in program.steps:
        if step.label in env:
            raise ProgramSyntaxError(step.label, "duplicate step label")
        env[step.label] = _check_step(step, env, bound={})
    final = env[program.steps[-1].label]
    if final not in FINAL_TYPES:
        raise TypeMismatchError(
            program.steps[-1].label,
            f"final step must produce boolean/number/label, not {final}",
        )


def _check_step(step: Step, env: dict[str, str], bound: dict[str, str]) -> str:
    spec = OPS.get(step.op)
    if spec is None:
        raise UnknownOperatorError(step.label, f"unknown operator {step.op!r}")
    n_fixed = len(spec.params)
    n_args = len(step.args)
    if spec.variadic_pairs is None:
        if n_args != n_fixed:
            raise ArityError(
                step.label, f"{step.op} takes {n_fixed} arguments, got {n_args}"
            )
    else:
        extra = n_args - n_fixed
        if extra < 0 or extra % len(spec.variadic_pairs) != 0:
            raise ArityError(
                step.label,
                f"{step.op} takes {n_fixed} arguments plus (modifier, set) pairs, got {n_args}",
            )
    scalar_kinds = []
    for i, arg in enumerate(step.args):
        if i < n_fixed:
            expected = spec.params[i]
        else:
            expected = spec.variadic_pairs[(i - n_fixed) % len(spec.variadic_pairs)]
        kind = _check_arg(step, arg, expected, env, bound)
        if expected == SCALAR:
            scalar_kinds.append(kind)
    if scalar_kinds and len(set(scalar_kinds)) > 1:
        raise TypeMismatchError(
            step.label, f"{step.op} arguments must both be numbers or both labels"
        )
    return spec.result


def _check_arg(step: Step, arg, expected, env, bound) -> str:
    if expected == "sub":
        if not isinstance(arg, SubProgram):
            raise TypeMismatchError(step.label, f"{step.op} needs a sub-program argument")
        return _check_subprogram(step, arg, env, bound)
    if isinstance(arg, SubProgram):
        raise TypeMismatchError(step.label, f"{step.op} does not take a sub-program here")
    if isinstance(arg, Ref):
        if arg.label not in env:
            raise ForwardReferenceError(
                step.label, f"reference @{arg.label} is not an earlier step"
            )
        actual = env[arg.label]
        return _require_type(step, actual, expected, f"@{arg.label}")
    if isinstance(arg, VarRef):
        if arg.name not in bound:
            raise ForwardReferenceError(step.label, f"unbound variable {arg.name!r}")
        # Bound object variables lift to singleton sets where a set is expected.
        if expected in (SET, OBJECT) or (
            isinstance(expected, tuple) and (SET in expected or OBJECT in expected)
        ):
            return OBJECT
        raise TypeMismatchError(step.label, "bound variable used in a non-object slot")
    if isinstance(arg, Literal):
        if isinstance(arg.value, int):
            if expected == NUM or expected == NUMBER or (
                isinstance(expected, tuple) and NUMBER in expected
            ):
                return NUMBER
            raise TypeMismatchError(step.label, f"{step.op} got a number where {expected} expected")
        if expected in WORD_KINDS:
            return LABEL
        if isinstance(expected, tuple) and LABEL in expected:
            return LABEL
        raise TypeMismatchError(
            step.label, f"{step.op} got word {arg.value!r} where {expected} expected"
        )
    raise TypeMismatchError(step.label, f"unsupported argument {arg!r}")


def _require_type(step: Step, actual: str, expected, what: str) -> str:
    if isinstance(expected, tuple):
        if actual in expected:
            return actual
    elif expected in WORD_KINDS and actual == LABEL:
        return actual
    elif actual == expected:
        return actual
    elif expected == SET and actual == OBJECT:
        # Single objects lift to singleton sets.
        return actual
    raise TypeMismatchError(step.label, f"{what} has type {actual}, expected {expected}")


def _check_subprogram(step: Step, sub: SubProgram, outer_env, outer_bound) -> str:
    env = dict(outer_env)
    bound = dict(outer_bound)
    bound[sub.var] = OBJECT
    for inner in sub.steps:
        if inner.label in env:
            raise ProgramSyntaxError(inner.label, "duplicate step label in sub-program")
        env[inner.label] = _check_step(inner, env, bound)
    result = env[sub.steps[-1].label]
    if result != BOOLEAN:
        raise TypeMismatchError(
            step.label, f"sub-program must produce a boolean, not {result}"
        )
    return result


# ---------------------------------------------------------------------------
# serialization


def serialize(program: Program) -> str:
    return "\n".join(_serialize_step(s) for s in program.steps)


def _serialize_step(step: Step) -> str:
    return f"{step.label} = {step.op}({', '.join(_serialize_arg(a) for a in step.args)})"


def _serialize_arg(arg) -> str:
    if isinstance(arg, Ref):
        return f"@{arg.label}"
    if isinstance(arg, VarRef):
        return arg.name
    if isinstance(arg, SubProgram):
        inner = "; ".join(_serialize_step(s) for s in arg.steps)
        return f"{{{arg.var}| {inner}}}"
    return str(arg.value)


# ---------------------------------------------------------------------------
# anonymization


def anonymize(program: Program) -> Program:
    """Replace every noun/attribute/relation literal with the placeholder;
    operator tags, structure, numbers and references stay unchanged."""
    return Program(tuple(_anonymize_step(s) for s in program.steps))


def _anonymize_step(step: Step) -> Step:
    spec = OPS[step.op]
    n_fixed = len(spec.params)
    args = []
    for i, arg in enumerate(step.args):
        expected = (
            spec.params[i]
            if i < n_fixed
            else spec.variadic_pairs[(i - n_fixed) % len(spec.variadic_pairs)]
        )
        if isinstance(arg, SubProgram):
            args.append(SubProgram(arg.var, tuple(_anonymize_step(s) for s in arg.steps)))
        elif isinstance(arg, Literal) and isinstance(arg.value, str) and expected in WORD_KINDS:
            args.append(Literal(PLACEHOLDER))
        else:
            args.append(arg)
    return Step(step.label, step.op, tuple(args))


def anonymized_key(program: Program) -> str:
    """Compact structural key: anonymized, labels renumbered positionally,
    steps joined by "; " with no spaces inside argument lists."""
    anon = anonymize(program)
    numbering: dict[str, str] = {}
    counter = [0]

    def assign(steps):
        rendered = []
        for step in steps:
            counter[0] += 1
            numbering[step.label] = str(counter[0])
            rendered.append(step)
        return rendered

    def render_steps(steps, bound_vars):
        out = []
        for step in steps:
            args = []
            for arg in step.args:
                if isinstance(arg, Ref):
                    args.append("@" + numbering[arg.label])
                elif isinstance(arg, SubProgram):
                    var = f"x{len(bound_vars) + 1}" if bound_vars else "x"
                    inner_map = dict(bound_vars)
                    inner_map[arg.var] = var
                    assign(arg.steps)
                    inner = render_steps(arg.steps, inner_map)
                    args.append("{" + var + "| " + "; ".join(inner) + "}")
                elif isinstance(arg, VarRef):
                    args.append(bound_vars.get(arg.name, arg.name))
                else:
                    args.append(str(arg.value) if isinstance(arg, Literal) else str(arg))
            out.append(f"{step.op}({','.join(args)})")
        return out

    # Top-level steps take 1..n; each sub-program's steps are numbered when
    # its quantifier step is rendered, so references always resolve.
    assign(anon.steps)
    return "; ".join(render_steps(anon.steps, {}))


def program_literals(program: Program) -> set[str]:
    """All noun/attribute/relation words in the program (numbers excluded)."""
    words: set[str] = set()

    def walk(steps):
        for step in steps:
            spec = OPS[step.op]
            n_fixed = len(spec.params)
            for i, arg in enumerate(step.args):
                expected = (
                    spec.params[i]
                    if i < n_fixed
                    else spec.variadic_pairs[(i - n_fixed) % len(spec.variadic_pairs)]
                )
                if isinstance(arg, SubProgram):
                    walk(arg.steps)
                elif (
                    isinstance(arg, Literal)
                    and isinstance(arg.value, str)
                    and expected in WORD_KINDS
                ):
                    words.add(arg.value)

    walk(program.steps)
    return words

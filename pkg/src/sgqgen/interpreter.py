"""Program execution over multi-image scene collections.

Values flowing between steps: object sets (image id, object id pairs),
per-image groups, attribute-value sets, image-id sets, single objects,
numbers, booleans and labels. Execution is pure and deterministic: every
set-like value is kept as a sorted tuple.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexicon import AttributeCategories, default_attribute_categories
from .programs import (
    Literal,
    Program,
    Ref,
    Step,
    SubProgram,
    VarRef,
    validate_program,
)
from .scenes import SceneGraph


@dataclass(frozen=True)
class Answer:
    kind: str  # "bool" | "number" | "label"
    value: object

    def render(self) -> str:
        if self.kind == "bool":
            return "true" if self.value else "false"
        return str(self.value)

    @classmethod
    def of(cls, value) -> "Answer":
        if isinstance(value, bool):
            return cls("bool", value)
        if isinstance(value, int):
            return cls("number", value)
        if isinstance(value, str):
            return cls("label", value)
        raise TypeError(f"not an answer value: {value!r}")


class ExecutionError(Exception):
    kind = "execution error"


class CardinalityError(ExecutionError):
    kind = "cardinality error"


class PresuppositionError(ExecutionError):
    kind = "presupposition failure"


class MissingAttributeError(ExecutionError):
    kind = "missing attribute"


class ChoiceError(ExecutionError):
    kind = "choice failure"


class _Context:
    def __init__(self, scenes, categories: AttributeCategories):
        self.scenes = {s.image_id: s for s in scenes}
        self.categories = categories

    def node(self, ref):
        image_id, object_id = ref
        return self.scenes[image_id].object(object_id)


def execute(
    program: Program,
    scenes: list[SceneGraph],
    categories: AttributeCategories | None = None,
) -> Answer:
    """Run the program over the scene collection and return its answer."""
    validate_program(program)
    ctx = _Context(scenes, categories or default_attribute_categories())
    env: dict[str, object] = {}
    value = None
    for step in program.steps:
        value = _eval_step(step, env, {}, ctx)
        env[step.label] = value
    return Answer.of(value)


def _resolve(arg, env, bound):
    if isinstance(arg, Ref):
        return env[arg.label]
    if isinstance(arg, VarRef):
        return bound[arg.name]
    if isinstance(arg, Literal):
        return arg.value
    raise TypeError(f"unresolvable argument {arg!r}")


def _as_set(value):
    """Objects lift to singleton sets (bound variables in quantifier bodies)."""
    if isinstance(value, tuple) and len(value) == 2 and isinstance(value[0], str):
        return (value,)
    return value


def _eval_step(step: Step, env, bound, ctx: _Context):
    op = step.op
    args = step.args

    if op == "Find":
        name = _resolve(args[0], env, bound)
        return tuple(
            sorted(
                (img, obj.id)
                for img in sorted(ctx.scenes)
                for obj in ctx.scenes[img].objects
                if obj.name == name
            )
        )

    if op == "Filter":
        objects = _as_set(_resolve(args[0], env, bound))
        value = _resolve(args[1], env, bound)
        return tuple(ref for ref in objects if value in ctx.node(ref).attributes)

    if op == "Count":
        return len(_resolve(args[0], env, bound))

    if op == "Exists":
        return len(_as_set(_resolve(args[0], env, bound))) > 0

    if op in ("WithRelation", "WithRelationObject"):
        s1 = _as_set(_resolve(args[0], env, bound))
        s2 = set(_as_set(_resolve(args[1], env, bound)))
        rel = _resolve(args[2], env, bound)
        constraints = []
        for i in range(3, len(args), 2):
            mod_name = _resolve(args[i], env, bound)
            mod_set = set(_as_set(_resolve(args[i + 1], env, bound)))
            constraints.append((mod_name, mod_set))
        out = set()
        for img, oid in s1:
            for edge in ctx.scenes[img].object(oid).relations:
                if edge.name != rel or (img, edge.target) not in s2:
                    continue
                mods = dict(edge.modifiers)
                if any(
                    name not in mods or (img, mods[name]) not in mset
                    for name, mset in constraints
                ):
                    continue
                out.add((img, edge.target) if op == "WithRelationObject" else (img, oid))
        return tuple(sorted(out))

    if op == "RelatedObjects":
        objects = _as_set(_resolve(args[0], env, bound))
        rel = _resolve(args[1], env, bound)
        out = {
            (img, edge.target)
            for img, oid in objects
            for edge in ctx.scenes[img].object(oid).relations
            if edge.name == rel
        }
        return tuple(sorted(out))

    if op == "GroupByImages":
        objects = _as_set(_resolve(args[0], env, bound))
        grouped: dict[str, list] = {}
        for img, oid in objects:
            grouped.setdefault(img, []).append(oid)
        return tuple((img, tuple(sorted(grouped[img]))) for img in sorted(grouped))

    if op in ("KeepIfValuesCountEq", "KeepIfValuesCountGt", "KeepIfValuesCountLt"):
        groups = _resolve(args[0], env, bound)
        k = _resolve(args[1], env, bound)
        if op.endswith("Eq"):
            keep = lambda n: n == k
        elif op.endswith("Gt"):
            keep = lambda n: n > k
        else:
            keep = lambda n: n < k
        return tuple(g for g in groups if keep(len(g[1])))

    if op in ("All", "Some", "None"):
        domain = _as_set(_resolve(args[0], env, bound))
        if not domain:
            raise PresuppositionError(f"{op} quantifier over an empty set")
        sub: SubProgram = args[1]
        outcomes = []
        for ref in domain:
            inner_env = dict(env)
            inner_bound = dict(bound)
            inner_bound[sub.var] = ref
            value = None
            for inner in sub.steps:
                value = _eval_step(inner, inner_env, inner_bound, ctx)
                inner_env[inner.label] = value
            outcomes.append(bool(value))
        if op == "All":
            return all(outcomes)
        if op == "Some":
            return any(outcomes)
        return not any(outcomes)

    if op == "Unique":
        objects = _as_set(_resolve(args[0], env, bound))
        if len(objects) != 1:
            raise CardinalityError(f"Unique over a set of size {len(objects)}")
        return objects[0]

    if op == "UniqueImages":
        objects = _as_set(_resolve(args[0], env, bound))
        return tuple(sorted({img for img, _ in objects}))

    if op == "QueryName":
        return ctx.node(_resolve(args[0], env, bound)).name

    if op == "QueryAttribute":
        ref = _resolve(args[0], env, bound)
        category = _resolve(args[1], env, bound)
        values = _category_values(ctx, ref, category)
        if not values:
            raise MissingAttributeError(
                f"object {ref[1]!r} has no {category!r} attribute"
            )
        return values[0]

    if op == "VerifyAttribute":
        ref = _resolve(args[0], env, bound)
        value = _resolve(args[1], env, bound)
        return value in ctx.node(ref).attributes

    if op == "UniqueAttributeValues":
        objects = _as_set(_resolve(args[0], env, bound))
        category = _resolve(args[1], env, bound)
        out = set()
        for ref in objects:
            values = _category_values(ctx, ref, category)
            if not values:
                raise MissingAttributeError(
                    f"object {ref[1]!r} has no {category!r} attribute"
                )
            out.update(values)
        return tuple(sorted(out))

    if op == "ChooseAttr":
        ref = _resolve(args[0], env, bound)
        v1 = _resolve(args[1], env, bound)
        v2 = _resolve(args[2], env, bound)
        attrs = ctx.node(ref).attributes
        return _choose(v1 in attrs, v2 in attrs, v1, v2, "attribute")

    if op == "ChooseName":
        ref = _resolve(args[0], env, bound)
        rel = _resolve(args[1], env, bound)
        n1 = _resolve(args[2], env, bound)
        n2 = _resolve(args[3], env, bound)
        img = ref[0]
        names = {
            ctx.scenes[img].object(edge.target).name
            for edge in ctx.node(ref).relations
            if edge.name == rel
        }
        return _choose(n1 in names, n2 in names, n1, n2, "object")

    if op == "ChooseRel":
        ref = _resolve(args[0], env, bound)
        targets = set(_as_set(_resolve(args[1], env, bound)))
        r1 = _resolve(args[2], env, bound)
        r2 = _resolve(args[3], env, bound)
        img = ref[0]
        rels = {
            edge.name
            for edge in ctx.node(ref).relations
            if (img, edge.target) in targets
        }
        return _choose(r1 in rels, r2 in rels, r1, r2, "relation")

    if op == "And":
        return bool(_resolve(args[0], env, bound)) and bool(_resolve(args[1], env, bound))
    if op == "Or":
        return bool(_resolve(args[0], env, bound)) or bool(_resolve(args[1], env, bound))
    if op == "eq":
        return _resolve(args[0], env, bound) == _resolve(args[1], env, bound)
    if op == "gt":
        return _resolve(args[0], env, bound) > _resolve(args[1], env, bound)
    if op == "lt":
        return _resolve(args[0], env, bound) < _resolve(args[1], env, bound)
    if op == "geq":
        return _resolve(args[0], env, bound) >= _resolve(args[1], env, bound)
    if op == "leq":
        return _resolve(args[0], env, bound) <= _resolve(args[1], env, bound)

    raise ExecutionError(f"operator {op!r} has no execution rule")


def _category_values(ctx: _Context, ref, category: str) -> list[str]:
    return sorted(
        a for a in ctx.node(ref).attributes if ctx.categories.category_of(a) == category
    )


def _choose(has1: bool, has2: bool, v1, v2, what: str):
    if has1 == has2:
        state = "both" if has1 else "neither"
        raise ChoiceError(f"{state} offered {what} options hold: {v1!r} / {v2!r}")
    return v1 if has1 else v2

"""Independent brute-force oracles the implementation is checked against.

Everything here recomputes results from first principles: the program oracle
evaluates operators as literal set comprehensions over plain dicts, the edit
distance oracle enumerates every shape-preserving isomorphism explicitly, and
the matching oracle tries every injective object mapping. None of it shares
evaluation logic with the package.
"""

from __future__ import annotations

import itertools

from sgqgen.programs import Literal, Ref, SubProgram, VarRef
from sgqgen.subgraphs import PatternObject, canonicalize, positions


# ---------------------------------------------------------------------------
# program evaluation oracle


def plain_scenes(scenes):
    out = {}
    for scene in scenes:
        objs = {}
        for obj in scene.objects:
            objs[obj.id] = {
                "name": obj.name,
                "attrs": set(obj.attributes),
                "rels": [
                    (r.name, r.target, dict(r.modifiers)) for r in obj.relations
                ],
            }
        out[scene.image_id] = objs
    return out


class OracleError(Exception):
    def __init__(self, kind):
        super().__init__(kind)
        self.kind = kind


def oracle_execute(program, scenes, categories):
    """Returns ("ok", rendered answer) or ("error", error kind)."""
    data = plain_scenes(scenes)
    try:
        value = _run_steps(program.steps, {}, {}, data, categories)
    except OracleError as exc:
        return ("error", exc.kind)
    if isinstance(value, bool):
        return ("ok", "true" if value else "false")
    return ("ok", str(value))


def _run_steps(steps, env, bound, data, categories):
    value = None
    env = dict(env)
    for step in steps:
        value = _op(step, env, bound, data, categories)
        env[step.label] = value
    return value


def _val(arg, env, bound):
    if isinstance(arg, Ref):
        return env[arg.label]
    if isinstance(arg, VarRef):
        return bound[arg.name]
    if isinstance(arg, Literal):
        return arg.value
    raise TypeError(arg)


def _setof(value):
    if isinstance(value, tuple) and len(value) == 2 and isinstance(value[0], str):
        return {value}
    return set(value)


def _cat_values(data, categories, ref, category):
    img, oid = ref
    return sorted(
        a for a in data[img][oid]["attrs"] if categories.category_of(a) == category
    )


def _op(step, env, bound, data, categories):
    a = [
        arg if isinstance(arg, SubProgram) else _val(arg, env, bound)
        for arg in step.args
    ]
    op = step.op
    if op == "Find":
        return {
            (img, oid)
            for img in data
            for oid in data[img]
            if data[img][oid]["name"] == a[0]
        }
    if op == "Filter":
        return {(i, o) for (i, o) in _setof(a[0]) if a[1] in data[i][o]["attrs"]}
    if op == "Count":
        return len(a[0])
    if op == "Exists":
        return len(_setof(a[0])) > 0
    if op in ("WithRelation", "WithRelationObject"):
        s1, s2, rel = _setof(a[0]), _setof(a[1]), a[2]
        pairs = list(zip(a[3::2], a[4::2]))
        hits = set()
        for (i, o) in s1:
            for (rname, tgt, mods) in data[i][o]["rels"]:
                if rname != rel or (i, tgt) not in s2:
                    continue
                if all(
                    m in mods and (i, mods[m]) in _setof(ms) for m, ms in pairs
                ):
                    hits.add((i, tgt) if op == "WithRelationObject" else (i, o))
        return hits
    if op == "RelatedObjects":
        return {
            (i, tgt)
            for (i, o) in _setof(a[0])
            for (rname, tgt, _) in data[i][o]["rels"]
            if rname == a[1]
        }
    if op == "GroupByImages":
        members = _setof(a[0])
        images = sorted({i for (i, _) in members})
        return [
            (img, sorted(o for (i, o) in members if i == img)) for img in images
        ]
    if op in ("KeepIfValuesCountEq", "KeepIfValuesCountGt", "KeepIfValuesCountLt"):
        groups, k = a[0], a[1]
        if op.endswith("Eq"):
            return [g for g in groups if len(g[1]) == k]
        if op.endswith("Gt"):
            return [g for g in groups if len(g[1]) > k]
        return [g for g in groups if len(g[1]) < k]
    if op in ("All", "Some", "None"):
        domain = sorted(_setof(a[0]))
        if not domain:
            raise OracleError("presupposition failure")
        sub = step.args[1]
        results = [
            bool(
                _run_steps(
                    sub.steps, env, {**bound, sub.var: ref}, data, categories
                )
            )
            for ref in domain
        ]
        return {
            "All": all(results),
            "Some": any(results),
            "None": not any(results),
        }[op]
    if op == "Unique":
        members = sorted(_setof(a[0]))
        if len(members) != 1:
            raise OracleError("cardinality error")
        return members[0]
    if op == "UniqueImages":
        return sorted({i for (i, _) in _setof(a[0])})
    if op == "QueryName":
        i, o = a[0]
        return data[i][o]["name"]
    if op == "QueryAttribute":
        values = _cat_values(data, categories, a[0], a[1])
        if not values:
            raise OracleError("missing attribute")
        return values[0]
    if op == "VerifyAttribute":
        i, o = a[0]
        return a[1] in data[i][o]["attrs"]
    if op == "UniqueAttributeValues":
        out = set()
        for ref in _setof(a[0]):
            values = _cat_values(data, categories, ref, a[1])
            if not values:
                raise OracleError("missing attribute")
            out.update(values)
        return sorted(out)
    if op == "ChooseAttr":
        i, o = a[0]
        h1, h2 = a[1] in data[i][o]["attrs"], a[2] in data[i][o]["attrs"]
        if h1 == h2:
            raise OracleError("choice failure")
        return a[1] if h1 else a[2]
    if op == "ChooseName":
        i, o = a[0]
        names = {
            data[i][tgt]["name"]
            for (rname, tgt, _) in data[i][o]["rels"]
            if rname == a[1]
        }
        h1, h2 = a[2] in names, a[3] in names
        if h1 == h2:
            raise OracleError("choice failure")
        return a[2] if h1 else a[3]
    if op == "ChooseRel":
        (i, o), targets = a[0], _setof(a[1])
        rels = {
            rname for (rname, tgt, _) in data[i][o]["rels"] if (i, tgt) in targets
        }
        h1, h2 = a[2] in rels, a[3] in rels
        if h1 == h2:
            raise OracleError("choice failure")
        return a[2] if h1 else a[3]
    if op == "And":
        return a[0] and a[1]
    if op == "Or":
        return a[0] or a[1]
    if op == "eq":
        return a[0] == a[1]
    if op == "gt":
        return a[0] > a[1]
    if op == "lt":
        return a[0] < a[1]
    if op == "geq":
        return a[0] >= a[1]
    if op == "leq":
        return a[0] <= a[1]
    raise AssertionError(f"oracle has no rule for {op}")


# ---------------------------------------------------------------------------
# edit distance oracle: enumerate every isomorphism explicitly


def _isomorphisms(p1: PatternObject, p2: PatternObject):
    """Yield complete (kind, name1, name2) pairings for every shape-preserving
    isomorphism between the two patterns."""
    if (p1.attribute is None) != (p2.attribute is None):
        return
    if len(p1.relations) != len(p2.relations):
        return
    base = [("object", p1.name, p2.name)]
    if p1.attribute is not None:
        base.append(("attribute", p1.attribute, p2.attribute))
    if not p1.relations:
        yield base
        return
    for perm in itertools.permutations(range(len(p2.relations))):
        options_per_rel = []
        feasible = True
        for i, j in enumerate(perm):
            r1, r2 = p1.relations[i], p2.relations[j]
            if len(r1.modifiers) != len(r2.modifiers):
                feasible = False
                break
            rel_options = []
            for mod_perm in itertools.permutations(range(len(r2.modifiers))):
                for target_pairs in _isomorphisms(r1.target, r2.target):
                    mod_sets = [[]]
                    for mi, mj in enumerate(mod_perm):
                        m1, m2 = r1.modifiers[mi], r2.modifiers[mj]
                        expanded = []
                        for tail in mod_sets:
                            for mpairs in _isomorphisms(m1.target, m2.target):
                                expanded.append(
                                    tail
                                    + [("modifier", m1.name, m2.name)]
                                    + mpairs
                                )
                        mod_sets = expanded
                    for mods in mod_sets:
                        rel_options.append(
                            [("relation", r1.name, r2.name)] + target_pairs + mods
                        )
            if not rel_options:
                feasible = False
                break
            options_per_rel.append(rel_options)
        if not feasible:
            continue
        for combo in itertools.product(*options_per_rel):
            pairs = list(base)
            for chunk in combo:
                pairs.extend(chunk)
            yield pairs


def brute_edit_distance(g1, g2, lex):
    best = None
    for pairs in _isomorphisms(canonicalize(g1), canonicalize(g2)):
        cost = 0
        blocked = False
        for kind, n1, n2 in pairs:
            if n1 == n2:
                continue
            if not lex.excludes(kind, n1, n2):
                blocked = True
                break
            cost += 1
        if blocked:
            continue
        if best is None or cost < best:
            best = cost
    return best


# ---------------------------------------------------------------------------
# subgraph matching oracle: try every injective object mapping


def brute_force_assignments(g: PatternObject, scene):
    g = canonicalize(g)
    object_paths = [p[:-1] for p, kind, _ in positions(g) if kind == "object"]
    scene_ids = [o.id for o in scene.objects]
    found = []
    for combo in itertools.permutations(scene_ids, len(object_paths)):
        mapping = dict(zip(object_paths, combo))
        if _mapping_consistent(g, (), mapping, scene):
            found.append({path: mapping[path] for path in object_paths})
    unique = {tuple(sorted(m.items())): m for m in found}
    return [unique[k] for k in sorted(unique)]


def _mapping_consistent(node: PatternObject, prefix, mapping, scene):
    obj = scene.object(mapping[prefix])
    if obj.name != node.name:
        return False
    if node.attribute is not None and node.attribute not in obj.attributes:
        return False
    for i, rel in enumerate(node.relations):
        target_path = prefix + ("r", i, "t")
        edge_found = False
        for edge in obj.relations:
            if edge.name != rel.name or edge.target != mapping[target_path]:
                continue
            mods_ok = True
            for j, mod in enumerate(rel.modifiers):
                mod_path = prefix + ("r", i, "m", j, "t")
                if (mod.name, mapping[mod_path]) not in edge.modifiers:
                    mods_ok = False
                    break
            if mods_ok:
                edge_found = True
                break
        if not edge_found:
            return False
        if not _mapping_consistent(rel.target, target_path, mapping, scene):
            return False
        for j, mod in enumerate(rel.modifiers):
            if not _mapping_consistent(
                mod.target, prefix + ("r", i, "m", j, "t"), mapping, scene
            ):
                return False
    return True

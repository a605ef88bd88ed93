"""Semantic checks for parsed specifications.

Resolves every attribute access against the metamodel, binds `self` per
context, verifies that constraint bodies are boolean and objective bodies are
linear in the mapping variables, and lowers rule declarations to executable
rules. All diagnostics carry a source location; every problem found in one
pass is reported together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..model import Metamodel
from ..pattern import Pattern, PatternEdge, PatternNode, Rule
from . import ast as A

NUMERIC = ("int", "real")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class TypecheckError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Ty:
    kind: str  # 'int', 'real', 'bool', 'string', 'node', 'match'
    of: str | None = None  # node type for 'node', rule name for 'match'
    varbearing: bool = False  # term contains mapping variables

    def numeric(self) -> bool:
        return self.kind in NUMERIC


def _promote(a: str, b: str) -> str:
    return "int" if a == "int" and b == "int" else "real"


@dataclass(frozen=True)
class MappingDef:
    name: str
    rule: str


@dataclass(frozen=True)
class TypedConstraint:
    context_kind: str
    context_target: str
    body: object
    pos: A.Pos


@dataclass(frozen=True)
class TypedObjective:
    name: str
    context_kind: str
    context_target: str
    body: object
    pos: A.Pos


@dataclass(frozen=True)
class GlobalObjective:
    sense: str
    weights: dict[str, float]
    constant: float


@dataclass
class TypedSpec:
    mm: Metamodel
    rules: dict[str, Rule]
    mappings: list[MappingDef]
    constraints: list[TypedConstraint]
    objectives: list[TypedObjective]
    global_objective: GlobalObjective
    warnings: list[Diagnostic] = field(default_factory=list)

    def mapping(self, name: str) -> MappingDef:
        return next(m for m in self.mappings if m.name == name)

    def rule_of_mapping(self, name: str) -> Rule:
        return self.rules[self.mapping(name).rule]


class _Checker:
    def __init__(self, mm: Metamodel):
        self.mm = mm
        self.diags: list[Diagnostic] = []
        self.warnings: list[Diagnostic] = []
        self.rules: dict[str, Rule] = {}
        self.mappings: dict[str, MappingDef] = {}

    def error(self, pos: A.Pos, message: str) -> Ty:
        self.diags.append(Diagnostic(pos.line, pos.col, message))
        return Ty("real")  # recovery type keeps checking going

    # -- rules -----------------------------------------------------------------

    def check_rule(self, decl: A.RuleDecl):
        if decl.name in self.rules:
            self.error(decl.pos, f"duplicate rule {decl.name!r}")
            return
        node_types: dict[str, str] = {}
        pnodes = []
        for n in decl.nodes:
            if n.name in node_types:
                self.error(n.pos, f"duplicate pattern node {n.name!r}")
                continue
            if n.type not in self.mm.node_types:
                self.error(n.pos, f"unknown node type {n.type!r}")
                continue
            node_types[n.name] = n.type
            pnodes.append(PatternNode(n.name, n.type))
        pedges = []
        edge_names = set()
        for e in decl.edges:
            if e.name in edge_names:
                self.error(e.pos, f"duplicate pattern edge {e.name!r}")
                continue
            edge_names.add(e.name)
            et = self.mm.edge_types.get(e.type)
            if et is None:
                self.error(e.pos, f"unknown edge type {e.type!r}")
                continue
            ok = True
            for endpoint, declared in ((e.src, et.source_type), (e.tgt, et.target_type)):
                if endpoint not in node_types:
                    self.error(e.pos, f"edge {e.name!r} references undeclared node "
                                      f"{endpoint!r}")
                    ok = False
                elif not (self.mm.conforms(node_types[endpoint], declared)
                          or self.mm.conforms(declared, node_types[endpoint])):
                    self.error(e.pos, f"edge {e.name!r}: node {endpoint!r} of type "
                                      f"{node_types[endpoint]!r} can never conform to "
                                      f"{declared!r}")
                    ok = False
            if ok:
                pedges.append(PatternEdge(e.name, e.type, e.src, e.tgt))
        scope = {name: Ty("node", t) for name, t in node_types.items()}
        if decl.condition is not None:
            ty = self.expr(decl.condition, scope, allow_sets=False)
            if ty.kind != "bool":
                self.error(decl.pos, f"rule {decl.name!r}: condition must be boolean")
        self.check_actions(decl, node_types, dict(scope))
        self.rules[decl.name] = Rule(decl.name,
                                     Pattern(decl.name, tuple(pnodes), tuple(pedges),
                                             decl.condition),
                                     decl.actions)

    def check_actions(self, decl: A.RuleDecl, node_types: dict[str, str],
                      scope: dict[str, Ty]):
        lhs_nodes = set(node_types)
        lhs_edges = {e.name for e in decl.edges}
        for action in decl.actions:
            if isinstance(action, A.CreateNodeAction):
                if action.type not in self.mm.node_types:
                    self.error(action.pos, f"unknown node type {action.type!r}")
                    continue
                if action.name in scope:
                    self.error(action.pos, f"node name {action.name!r} already in use")
                declared = self.mm.attrs_of(action.type)
                given = {}
                for attr, expr in action.attr_inits:
                    if attr not in declared:
                        self.error(action.pos,
                                   f"{action.type!r} has no attribute {attr!r}")
                        continue
                    given[attr] = self.expr(expr, scope, allow_sets=False)
                for attr, kind in declared.items():
                    if attr not in given:
                        self.error(action.pos,
                                   f"created node {action.name!r} misses attribute "
                                   f"{attr!r}")
                    else:
                        self._check_assignable(given[attr], kind, action.pos, attr)
                scope[action.name] = Ty("node", action.type)
            elif isinstance(action, A.CreateEdgeAction):
                et = self.mm.edge_types.get(action.edge_type)
                if et is None:
                    self.error(action.pos, f"unknown edge type {action.edge_type!r}")
                    continue
                for endpoint, declared in ((action.src, et.source_type),
                                           (action.tgt, et.target_type)):
                    ty = scope.get(endpoint)
                    if ty is None or ty.kind != "node":
                        self.error(action.pos, f"unknown node {endpoint!r} in action")
                    elif not self.mm.conforms(ty.of, declared):
                        self.error(action.pos,
                                   f"node {endpoint!r} of type {ty.of!r} does not "
                                   f"conform to {declared!r}")
            elif isinstance(action, A.DeleteEdgeAction):
                if action.name not in lhs_edges:
                    self.error(action.pos, f"no LHS edge named {action.name!r}")
            elif isinstance(action, A.DeleteNodeAction):
                if action.name not in lhs_nodes:
                    self.error(action.pos, f"no LHS node named {action.name!r}")
            elif isinstance(action, A.SetAttrAction):
                ty = scope.get(action.node)
                if ty is None or ty.kind != "node":
                    self.error(action.pos, f"unknown node {action.node!r} in action")
                    continue
                kind = self.mm.attrs_of(ty.of).get(action.attr)
                if kind is None:
                    self.error(action.pos,
                               f"{ty.of!r} has no attribute {action.attr!r}")
                    continue
                value_ty = self.expr(action.value, scope, allow_sets=False)
                self._check_assignable(value_ty, kind, action.pos, action.attr)

    def _check_assignable(self, ty: Ty, kind: str, pos: A.Pos, attr: str):
        if ty.varbearing:
            self.error(pos, f"value for {attr!r} must not involve mapping variables")
        if kind in NUMERIC:
            if not ty.numeric():
                self.error(pos, f"attribute {attr!r} expects a number")
            elif kind == "int" and ty.kind == "real":
                self.error(pos, f"attribute {attr!r} is int but value is real")
        elif ty.kind != kind:
            self.error(pos, f"attribute {attr!r} expects {kind}")

    # -- expressions -------------------------------------------------------------

    def expr(self, e, scope: dict[str, Ty], allow_sets: bool) -> Ty:
        if isinstance(e, A.Num):
            return Ty("int" if isinstance(e.value, int) else "real")
        if isinstance(e, A.BoolLit):
            return Ty("bool")
        if isinstance(e, A.StrLit):
            return Ty("string")
        if isinstance(e, A.Name):
            ty = scope.get(e.id)
            if ty is None:
                return self.error(e.pos, f"unknown name {e.id!r}")
            return ty
        if isinstance(e, A.SelfRef):
            ty = scope.get("self")
            if ty is None:
                return self.error(e.pos, "'self' is not available here")
            return ty
        if isinstance(e, A.NodesNav):
            base = self.expr(e.base, scope, allow_sets)
            if base.kind == "node":
                return self.error(e.pos, "nodes() cannot be used in a class context")
            if base.kind != "match":
                return self.error(e.pos, "nodes() applies to a match")
            rule = self.rules.get(base.of)
            if rule is None:
                return self.error(e.pos, f"unknown rule {base.of!r}")
            pn = next((n for n in rule.lhs.nodes if n.name == e.node), None)
            if pn is None:
                return self.error(e.pos, f"rule {base.of!r} has no pattern node "
                                         f"{e.node!r}")
            return Ty("node", pn.type)
        if isinstance(e, A.AttrRef):
            base = self.expr(e.base, scope, allow_sets)
            if base.kind == "match":
                return self.error(e.pos, "select a node with nodes() before reading "
                                         "an attribute")
            if base.kind != "node":
                return self.error(e.pos, f"attribute {e.attr!r} read on a non-node "
                                         f"value")
            kind = self.mm.attrs_of(base.of).get(e.attr)
            if kind is None:
                return self.error(e.pos, f"type {base.of!r} has no attribute "
                                         f"{e.attr!r}")
            return Ty(kind)
        if isinstance(e, A.Unary):
            if e.op == "!":
                ty = self.expr(e.operand, scope, allow_sets)
                if ty.kind != "bool":
                    return self.error(e.pos, "'!' applies to a boolean")
                return ty
            ty = self.expr(e.operand, scope, allow_sets)
            if not ty.numeric():
                return self.error(e.pos, f"{e.op!r} applies to a number")
            if e.op == "-":
                return ty
            if ty.varbearing:
                return self.error(e.pos, f"{e.op} requires a constant subexpression")
            return Ty("real")
        if isinstance(e, A.Binary):
            if e.op in ("&", "|"):
                lt = self.expr(e.left, scope, allow_sets)
                rt = self.expr(e.right, scope, allow_sets)
                if lt.kind != "bool" or rt.kind != "bool":
                    return self.error(e.pos, f"{e.op!r} applies to booleans")
                return Ty("bool", varbearing=lt.varbearing or rt.varbearing)
            lt = self.expr(e.left, scope, allow_sets)
            rt = self.expr(e.right, scope, allow_sets)
            if not lt.numeric() or not rt.numeric():
                return self.error(e.pos, f"{e.op!r} applies to numbers")
            if e.op == "*" and lt.varbearing and rt.varbearing:
                return self.error(e.pos, "nonlinear term: variable * variable")
            if e.op == "/":
                if rt.varbearing:
                    return self.error(e.pos, "division by a mapping-variable term")
                return Ty("real", varbearing=lt.varbearing)
            return Ty(_promote(lt.kind, rt.kind),
                      varbearing=lt.varbearing or rt.varbearing)
        if isinstance(e, A.Rel):
            lt = self.expr(e.left, scope, allow_sets)
            rt = self.expr(e.right, scope, allow_sets)
            if lt.kind in ("node", "match") or rt.kind in ("node", "match"):
                if e.op not in ("==", "!="):
                    return self.error(e.pos, f"{e.op!r} does not apply to graph "
                                             f"elements")
                if lt.kind != rt.kind:
                    return self.error(e.pos, "cannot compare a node with a match")
                return Ty("bool")
            if lt.kind in ("bool", "string") or rt.kind in ("bool", "string"):
                if e.op not in ("==", "!="):
                    return self.error(e.pos, f"{e.op!r} applies to numbers")
                if lt.kind != rt.kind:
                    return self.error(e.pos, "comparison of different kinds")
                if lt.varbearing or rt.varbearing:
                    return self.error(e.pos, "comparison operands must not involve "
                                             "mapping variables")
                return Ty("bool")
            if not lt.numeric() or not rt.numeric():
                return self.error(e.pos, f"{e.op!r} applies to numbers")
            return Ty("bool", varbearing=lt.varbearing or rt.varbearing)
        if isinstance(e, A.SetSum):
            if not allow_sets:
                return self.error(e.pos, "mapping sums are not allowed here")
            mapping = self.mappings.get(e.mapping)
            if mapping is None:
                return self.error(e.pos, f"unknown mapping {e.mapping!r}")
            match_ty = Ty("match", mapping.rule)
            if e.filter_pred is not None:
                inner = dict(scope)
                inner[e.filter_var] = match_ty
                pt = self.expr(e.filter_pred, inner, allow_sets=False)
                if pt.kind != "bool":
                    self.error(e.pos, "filter predicate must be boolean")
                if pt.varbearing:
                    self.error(e.pos, "filter predicate must not involve mapping "
                                      "variables")
            inner = dict(scope)
            inner[e.sum_var] = match_ty
            bt = self.expr(e.sum_body, inner, allow_sets=False)
            if not bt.numeric():
                self.error(e.pos, "sum body must be numeric")
            if bt.varbearing:
                self.error(e.pos, "sum body must not involve mapping variables")
            return Ty(bt.kind if bt.numeric() else "real", varbearing=True)
        return self.error(getattr(e, "pos", A.Pos()), f"cannot type {type(e).__name__}")

    # -- declarations ------------------------------------------------------------

    def context_scope(self, kind: str, target: str, pos: A.Pos) -> dict[str, Ty] | None:
        if kind == "class":
            if target not in self.mm.node_types:
                self.error(pos, f"unknown node type {target!r}")
                return None
            return {"self": Ty("node", target)}
        if kind == "mapping":
            mapping = self.mappings.get(target)
            if mapping is None:
                self.error(pos, f"unknown mapping {target!r}")
                return None
            return {"self": Ty("match", mapping.rule)}
        if target not in self.rules:
            self.error(pos, f"unknown rule {target!r}")
            return None
        return {"self": Ty("match", target)}

    def fold_global(self, e, objective_names: set[str]) -> tuple[dict[str, float], float]:
        """Fold the global objective into per-objective weights plus a constant."""
        if isinstance(e, A.Num):
            return {}, float(e.value)
        if isinstance(e, A.Name):
            if e.id not in objective_names:
                self.error(e.pos, f"unknown objective {e.id!r}")
                return {}, 0.0
            return {e.id: 1.0}, 0.0
        if isinstance(e, A.Unary) and e.op == "-":
            w, c = self.fold_global(e.operand, objective_names)
            return {k: -v for k, v in w.items()}, -c
        if isinstance(e, A.Unary) and e.op in ("sin", "cos", "sqrt"):
            w, c = self.fold_global(e.operand, objective_names)
            if w:
                self.error(e.pos, f"{e.op} requires a constant subexpression")
                return {}, 0.0
            func = {"sin": math.sin, "cos": math.cos, "sqrt": math.sqrt}[e.op]
            return {}, func(c)
        if isinstance(e, A.Binary) and e.op in ("+", "-"):
            lw, lc = self.fold_global(e.left, objective_names)
            rw, rc = self.fold_global(e.right, objective_names)
            sign = 1.0 if e.op == "+" else -1.0
            out = dict(lw)
            for k, v in rw.items():
                out[k] = out.get(k, 0.0) + sign * v
            return out, lc + sign * rc
        if isinstance(e, A.Binary) and e.op == "*":
            lw, lc = self.fold_global(e.left, objective_names)
            rw, rc = self.fold_global(e.right, objective_names)
            if lw and rw:
                self.error(e.pos, "objective weight is not constant")
                return {}, 0.0
            if lw:
                return {k: v * rc for k, v in lw.items()}, lc * rc
            return {k: v * lc for k, v in rw.items()}, rc * lc
        if isinstance(e, A.Binary) and e.op == "/":
            lw, lc = self.fold_global(e.left, objective_names)
            rw, rc = self.fold_global(e.right, objective_names)
            if rw:
                self.error(e.pos, "objective weight is not constant")
                return {}, 0.0
            if rc == 0:
                self.error(e.pos, "division by zero in global objective")
                return {}, 0.0
            return {k: v / rc for k, v in lw.items()}, lc / rc
        self.error(getattr(e, "pos", A.Pos()),
                   "global objective combines objective names with constant weights")
        return {}, 0.0


def typecheck(spec: A.SpecAst, mm: Metamodel) -> TypedSpec:
    """Validate a parsed spec against `mm`; raises TypecheckError with all
    diagnostics found."""
    ck = _Checker(mm)
    for rd in spec.rules:
        ck.check_rule(rd)
    for md in spec.mappings:
        if md.name in ck.mappings:
            ck.error(md.pos, f"duplicate mapping {md.name!r}")
            continue
        if md.rule not in ck.rules:
            ck.error(md.pos, f"mapping {md.name!r} references unknown rule "
                             f"{md.rule!r}")
            continue
        ck.mappings[md.name] = MappingDef(md.name, md.rule)
    constraints = []
    for cd in spec.constraints:
        scope = ck.context_scope(cd.context_kind, cd.context_target, cd.pos)
        if scope is None:
            continue
        ty = ck.expr(cd.body, scope, allow_sets=True)
        if ty.kind != "bool":
            ck.error(cd.pos, "constraint body must be boolean")
        constraints.append(TypedConstraint(cd.context_kind, cd.context_target,
                                           cd.body, cd.pos))
    objectives = []
    names_seen = set()
    for od in spec.objectives:
        if od.name in names_seen:
            ck.error(od.pos, f"duplicate objective {od.name!r}")
            continue
        names_seen.add(od.name)
        scope = ck.context_scope(od.context_kind, od.context_target, od.pos)
        if scope is None:
            continue
        ty = ck.expr(od.body, scope, allow_sets=True)
        if not ty.numeric():
            ck.error(od.pos, "objective body must be numeric")
        if od.context_kind == "mapping" and ty.varbearing:
            ck.error(od.pos, "a mapping-context objective gives the coefficient of "
                             "the match variable; it cannot contain mapping sums")
        if od.context_kind in ("class", "pattern") and not ty.varbearing:
            ck.warnings.append(Diagnostic(
                od.pos.line, od.pos.col,
                f"objective {od.name!r} contributes only generation-time constants "
                f"(a {od.context_kind} context carries no decision variable)"))
        objectives.append(TypedObjective(od.name, od.context_kind, od.context_target,
                                         od.body, od.pos))
    weights, constant = ck.fold_global(spec.global_objective.expr,
                                       {o.name for o in objectives})
    if ck.diags:
        raise TypecheckError(ck.diags)
    return TypedSpec(mm, ck.rules, list(ck.mappings.values()), constraints,
                     objectives, GlobalObjective(spec.global_objective.sense,
                                                 weights, constant),
                     warnings=ck.warnings)

"""AST for the specification language.

Position fields never take part in equality so structural comparison (and the
parse/pretty-print round-trip) ignores source locations.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


def _pos_field():
    return field(default_factory=Pos, compare=False, repr=False)


# --- expressions --------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: object  # int or float
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class StrLit(Expr):
    value: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Name(Expr):
    """A bare identifier: pattern node, lambda variable, or objective reference."""
    id: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class SelfRef(Expr):
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class NodesNav(Expr):
    """`base.nodes().node` - select a bound pattern node from a match."""
    base: Expr
    node: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class AttrRef(Expr):
    """`base.attr` - read an attribute of a node-valued expression."""
    base: Expr
    attr: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # '!', '-', 'sin', 'cos', 'sqrt'
    operand: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # '+', '-', '*', '/', '&', '|'
    left: Expr
    right: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class Rel(Expr):
    op: str  # '<', '<=', '==', '!=', '>=', '>'
    left: Expr
    right: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class SetSum(Expr):
    """`mappings.name->filter(v | pred)->sum(v | body)`; filter is optional."""
    mapping: str
    filter_var: str | None
    filter_pred: Expr | None
    sum_var: str
    sum_body: Expr
    pos: Pos = _pos_field()


# --- declarations -------------------------------------------------------------

@dataclass(frozen=True)
class PatternNodeDecl:
    name: str
    type: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class PatternEdgeDecl:
    name: str
    type: str
    src: str
    tgt: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class CreateEdgeAction:
    edge_type: str
    src: str
    tgt: str
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class CreateNodeAction:
    name: str
    type: str
    attr_inits: tuple[tuple[str, Expr], ...]
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class DeleteEdgeAction:
    name: str  # LHS edge name
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class DeleteNodeAction:
    name: str  # LHS node name
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class SetAttrAction:
    node: str
    attr: str
    value: Expr
    pos: Pos = _pos_field()


Action = (CreateEdgeAction, CreateNodeAction, DeleteEdgeAction, DeleteNodeAction,
          SetAttrAction)


@dataclass(frozen=True)
class RuleDecl:
    name: str
    nodes: tuple[PatternNodeDecl, ...]
    edges: tuple[PatternEdgeDecl, ...]
    condition: Expr | None
    actions: tuple[object, ...]
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class MappingDecl:
    name: str
    rule: str
    pos: Pos = _pos_field()


CONTEXT_KINDS = ("class", "pattern", "mapping")


@dataclass(frozen=True)
class ConstraintDecl:
    context_kind: str
    context_target: str
    body: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class ObjectiveDecl:
    name: str
    context_kind: str
    context_target: str
    body: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class GlobalObjectiveDecl:
    sense: str  # 'min' or 'max'
    expr: Expr
    pos: Pos = _pos_field()


@dataclass(frozen=True)
class SpecAst:
    rules: tuple[RuleDecl, ...]
    mappings: tuple[MappingDecl, ...]
    constraints: tuple[ConstraintDecl, ...]
    objectives: tuple[ObjectiveDecl, ...]
    global_objective: GlobalObjectiveDecl

"""Recursive-descent parser for the specification language (`.gipsl` files).

Operator precedence, loosest to tightest: `|`, `&`, comparisons, `+ -`,
`* /`, unary (`!`, `-`, `sin`, `cos`, `sqrt`). Binary operators associate
left. See docs/grammar.md for the full grammar.
"""

from __future__ import annotations

from .ast import (AttrRef, Binary, BoolLit, ConstraintDecl, CreateEdgeAction,
                  CreateNodeAction, DeleteEdgeAction, DeleteNodeAction,
                  GlobalObjectiveDecl, MappingDecl, Name, NodesNav, Num,
                  ObjectiveDecl, PatternEdgeDecl, PatternNodeDecl, Pos, Rel,
                  RuleDecl, SelfRef, SetAttrAction, SetSum, SpecAst, StrLit, Unary)
from .lexer import LexError, Token, TokenStream, tokenize

KEYWORDS = frozenset({
    "rule", "nodes", "edges", "condition", "actions",
    "create", "delete", "set", "node", "edge",
    "mapping", "with", "constraint", "objective", "global",
    "class", "pattern", "min", "max",
    "true", "false", "self", "mappings",
    "sin", "cos", "sqrt",
})


class DslSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


def _pos(tok: Token) -> Pos:
    return Pos(tok.line, tok.col)


class _Parser:
    def __init__(self, text: str):
        try:
            self.ts = TokenStream(tokenize(text, KEYWORDS))
        except LexError as e:
            raise DslSyntaxError(e.message, e.line, e.col) from None

    def expect(self, *kinds: str) -> Token:
        return self.ts.expect(*kinds, error=DslSyntaxError)

    def ident(self, what: str = "identifier") -> Token:
        tok = self.ts.current
        if tok.kind != "IDENT":
            raise DslSyntaxError(f"expected {what}, got {tok.value!r}", tok.line, tok.col)
        return self.ts.advance()

    # -- declarations ---------------------------------------------------------

    def spec(self) -> SpecAst:
        rules, mappings, constraints, objectives = [], [], [], []
        global_obj: GlobalObjectiveDecl | None = None
        while not self.ts.at("EOF"):
            tok = self.ts.current
            if tok.kind == "rule":
                rules.append(self.rule_decl())
            elif tok.kind == "mapping":
                mappings.append(self.mapping_decl())
            elif tok.kind == "constraint":
                constraints.append(self.constraint_decl())
            elif tok.kind == "objective":
                objectives.append(self.objective_decl())
            elif tok.kind == "global":
                decl = self.global_objective_decl()
                if global_obj is not None:
                    raise DslSyntaxError("duplicate global objective", tok.line, tok.col)
                global_obj = decl
            else:
                raise DslSyntaxError(
                    f"expected 'rule', 'mapping', 'constraint', 'objective' or "
                    f"'global', got {tok.value!r}", tok.line, tok.col)
        if global_obj is None:
            end = self.ts.current
            raise DslSyntaxError("missing global objective", end.line, end.col)
        return SpecAst(tuple(rules), tuple(mappings), tuple(constraints),
                       tuple(objectives), global_obj)

    def rule_decl(self) -> RuleDecl:
        start = self.expect("rule")
        name = self.ident("rule name")
        self.expect("{")
        nodes: list[PatternNodeDecl] = []
        edges: list[PatternEdgeDecl] = []
        condition = None
        actions: list[object] = []
        while not self.ts.accept("}"):
            section = self.expect("nodes", "edges", "condition", "actions")
            self.expect("{")
            if section.kind == "nodes":
                while not self.ts.accept("}"):
                    n = self.ident("pattern node name")
                    self.expect(":")
                    t = self.ident("node type")
                    nodes.append(PatternNodeDecl(n.value, t.value, _pos(n)))
            elif section.kind == "edges":
                while not self.ts.accept("}"):
                    n = self.ident("pattern edge name")
                    self.expect(":")
                    t = self.ident("edge type")
                    self.expect("(")
                    src = self.ident("source pattern node")
                    self.expect("->")
                    tgt = self.ident("target pattern node")
                    self.expect(")")
                    edges.append(PatternEdgeDecl(n.value, t.value, src.value, tgt.value,
                                                 _pos(n)))
            elif section.kind == "condition":
                condition = self.expression()
                self.expect("}")
            else:
                while not self.ts.accept("}"):
                    actions.append(self.action())
        return RuleDecl(name.value, tuple(nodes), tuple(edges), condition,
                        tuple(actions), _pos(start))

    def action(self):
        tok = self.expect("create", "delete", "set")
        if tok.kind == "create":
            kind = self.expect("edge", "node")
            if kind.kind == "edge":
                t = self.ident("edge type")
                self.expect("(")
                src = self.ident("source node")
                self.expect("->")
                tgt = self.ident("target node")
                self.expect(")")
                return CreateEdgeAction(t.value, src.value, tgt.value, _pos(tok))
            name = self.ident("new node name")
            self.expect(":")
            t = self.ident("node type")
            inits = []
            self.expect("{")
            while not self.ts.accept("}"):
                attr = self.ident("attribute name")
                self.expect(":=")
                inits.append((attr.value, self.expression()))
            return CreateNodeAction(name.value, t.value, tuple(inits), _pos(tok))
        if tok.kind == "delete":
            kind = self.expect("edge", "node")
            name = self.ident()
            if kind.kind == "edge":
                return DeleteEdgeAction(name.value, _pos(tok))
            return DeleteNodeAction(name.value, _pos(tok))
        node = self.ident("pattern node")
        self.expect(".")
        attr = self.ident("attribute name")
        self.expect(":=")
        return SetAttrAction(node.value, attr.value, self.expression(), _pos(tok))

    def mapping_decl(self) -> MappingDecl:
        start = self.expect("mapping")
        name = self.ident("mapping name")
        self.expect("with")
        rule = self.ident("rule name")
        self.expect(";")
        return MappingDecl(name.value, rule.value, _pos(start))

    def context(self) -> tuple[str, str]:
        kind = self.expect("class", "pattern", "mapping")
        self.expect("::")
        target = self.ident("context target")
        return kind.kind, target.value

    def constraint_decl(self) -> ConstraintDecl:
        start = self.expect("constraint")
        self.expect("->")
        kind, target = self.context()
        self.expect("{")
        body = self.expression()
        self.expect("}")
        return ConstraintDecl(kind, target, body, _pos(start))

    def objective_decl(self) -> ObjectiveDecl:
        start = self.expect("objective")
        name = self.ident("objective name")
        self.expect("->")
        kind, target = self.context()
        self.expect("{")
        body = self.expression()
        self.expect("}")
        return ObjectiveDecl(name.value, kind, target, body, _pos(start))

    def global_objective_decl(self) -> GlobalObjectiveDecl:
        start = self.expect("global")
        self.expect("objective")
        self.expect(":")
        sense = self.expect("min", "max")
        self.expect("{")
        expr = self.expression()
        self.expect("}")
        return GlobalObjectiveDecl(sense.kind, expr, _pos(start))

    # -- expressions ------------------------------------------------------------

    def expression(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.ts.at("|"):
            op = self.ts.advance()
            left = Binary("|", left, self.and_expr(), _pos(op))
        return left

    def and_expr(self):
        left = self.rel_expr()
        while self.ts.at("&"):
            op = self.ts.advance()
            left = Binary("&", left, self.rel_expr(), _pos(op))
        return left

    def rel_expr(self):
        left = self.sum_expr()
        if self.ts.at("<", "<=", "==", "!=", ">=", ">"):
            op = self.ts.advance()
            return Rel(op.kind, left, self.sum_expr(), _pos(op))
        return left

    def sum_expr(self):
        left = self.term()
        while self.ts.at("+", "-"):
            op = self.ts.advance()
            left = Binary(op.kind, left, self.term(), _pos(op))
        return left

    def term(self):
        left = self.unary()
        while self.ts.at("*", "/"):
            op = self.ts.advance()
            left = Binary(op.kind, left, self.unary(), _pos(op))
        return left

    def unary(self):
        tok = self.ts.current
        if tok.kind == "!":
            self.ts.advance()
            return Unary("!", self.unary(), _pos(tok))
        if tok.kind == "-":
            self.ts.advance()
            return Unary("-", self.unary(), _pos(tok))
        if tok.kind in ("sin", "cos", "sqrt"):
            self.ts.advance()
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Unary(tok.kind, arg, _pos(tok))
        return self.postfix()

    def postfix(self):
        expr = self.primary()
        while self.ts.at("."):
            dot = self.ts.advance()
            if self.ts.at("nodes") and self.ts.peek().kind == "(":
                self.ts.advance()
                self.expect("(")
                self.expect(")")
                self.expect(".")
                node = self.ident("pattern node name")
                expr = NodesNav(expr, node.value, _pos(dot))
            else:
                attr = self.ident("attribute name")
                expr = AttrRef(expr, attr.value, _pos(dot))
        return expr

    def primary(self):
        tok = self.ts.current
        if tok.kind == "INT" or tok.kind == "REAL":
            self.ts.advance()
            return Num(tok.value, _pos(tok))
        if tok.kind == "true":
            self.ts.advance()
            return BoolLit(True, _pos(tok))
        if tok.kind == "false":
            self.ts.advance()
            return BoolLit(False, _pos(tok))
        if tok.kind == "STRING":
            self.ts.advance()
            return StrLit(tok.value, _pos(tok))
        if tok.kind == "(":
            self.ts.advance()
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind == "self":
            self.ts.advance()
            return SelfRef(_pos(tok))
        if tok.kind == "mappings":
            return self.set_sum()
        if tok.kind == "IDENT":
            self.ts.advance()
            return Name(tok.value, _pos(tok))
        raise DslSyntaxError(f"expected an expression, got {tok.value!r}",
                             tok.line, tok.col)

    def set_sum(self) -> SetSum:
        start = self.expect("mappings")
        self.expect(".")
        mapping = self.ident("mapping name")
        filter_var = filter_pred = None
        self.expect("->")
        head = self.ident("'filter' or 'sum'")
        if head.value == "filter":
            self.expect("(")
            var = self.ident("filter variable")
            self.expect("|")
            filter_var, filter_pred = var.value, self.expression()
            self.expect(")")
            self.expect("->")
            head = self.ident("'sum'")
        if head.value != "sum":
            raise DslSyntaxError(f"expected 'sum', got {head.value!r}",
                                 head.line, head.col)
        self.expect("(")
        var = self.ident("sum variable")
        self.expect("|")
        body = self.expression()
        self.expect(")")
        return SetSum(mapping.value, filter_var, filter_pred, var.value, body,
                      _pos(start))


def parse(text: str) -> SpecAst:
    """Parse a complete specification document."""
    return _Parser(text).spec()


def parse_expression(text: str):
    """Parse a single expression; used by tests and the scenario tooling."""
    p = _Parser(text)
    expr = p.expression()
    p.expect("EOF")
    return expr

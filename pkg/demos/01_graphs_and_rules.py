"""Typed graphs and rewrite rules, step by step.

Load a schema plus instance from one document, find all matches of a rule's
precondition, apply the rule at one match, and watch the residual attribute
drop and the rematch set shrink.
"""

from graphilp import apply_delta, apply_rule, find_matches, load_model, parse, \
    serialize_model, typecheck

DOC = """
nodetypes {
  nodetype { name: Element }
  nodetype { name: Server  supertype: Element  attrs { cpu: int  resCpu: int } }
  nodetype { name: Task  supertype: Element  attrs { cpu: int  placed: bool } }
}
edgetypes { edgetype { name: host  src: Task  tgt: Server } }
nodes {
  node { id: s1  type: Server  attrs { cpu: 32  resCpu: 10 } }
  node { id: s2  type: Server  attrs { cpu: 32  resCpu: 5 } }
  node { id: t1  type: Task  attrs { cpu: 4  placed: false } }
  node { id: t2  type: Task  attrs { cpu: 7  placed: false } }
}
"""

SPEC = """
rule place {
  nodes { t: Task  s: Server }
  condition { !t.placed & s.resCpu >= t.cpu }
  actions {
    create edge host(t -> s)
    set s.resCpu := s.resCpu - t.cpu
    set t.placed := true
  }
}
mapping put with place;
global objective : min { 0 }
"""

mm, g = load_model(DOC)
spec = typecheck(parse(SPEC), mm)
rule = spec.rules["place"]

matches = find_matches(g, rule.lhs)
print(f"{len(matches)} matches of the precondition:")
for m in matches:
    print("  ", m.binding)

# t2 (cpu 7) does not fit on s2 (residual 5), so (t2, s2) is absent.
assert {"t": "t2", "s": "s2"} not in [m.binding for m in matches]

chosen = matches[0]
print("\napplying the rule at", chosen.binding)
delta = apply_rule(g, rule, chosen)
print("delta creates", [e.id for e in delta.created_edges],
      "and updates", list(delta.attr_updates))

g2 = apply_delta(g, delta)
print("\nresidual after application:",
      {sid: g2.attr(sid, "resCpu") for sid in ("s1", "s2")})
print(f"rematching now yields {len(find_matches(g2, rule.lhs))} matches "
      f"(the placed task dropped out)")

print("\nround-trip check:", end=" ")
text = serialize_model(mm, g2)
mm2, g3 = load_model(text)
print("ok" if g2.structurally_equal(g3) else "FAILED")

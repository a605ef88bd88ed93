"""Exact solving and the enumeration oracle.

Branch and bound over the LP relaxation gives the optimum; brute force
enumerates every assignment and must agree. The LP file round-trips through
the writer and reader, and Boolean constraint bodies beyond plain
conjunctions get auxiliary indicator variables.
"""

from graphilp import (brute_force, dump_problem, export_lp, generate,
                      import_lp, load_model, lp_relaxation, parse,
                      problems_equal, solve, typecheck)

DOC = """
nodetypes {
  nodetype { name: Server  attrs { resCpu: int } }
  nodetype { name: Task  attrs { cpu: int  placed: bool } }
}
edgetypes { edgetype { name: host  src: Task  tgt: Server } }
nodes {
  node { id: s1  type: Server  attrs { resCpu: 10 } }
  node { id: s2  type: Server  attrs { resCpu: 6 } }
  node { id: t1  type: Task  attrs { cpu: 4  placed: false } }
  node { id: t2  type: Task  attrs { cpu: 6  placed: false } }
  node { id: t3  type: Task  attrs { cpu: 5  placed: false } }
}
"""

# the third constraint is a genuine disjunction: a server either stays at
# most half loaded or hosts at most two tasks - it cannot stay a bare row
# set, so the compiler introduces indicator variables
SPEC = """
rule place {
  nodes { t: Task  s: Server }
  condition { !t.placed & s.resCpu >= t.cpu }
  actions { create edge host(t -> s)  set t.placed := true
            set s.resCpu := s.resCpu - t.cpu }
}
mapping put with place;
constraint -> class::Server {
  mappings.put->filter(m | m.nodes().s == self)->sum(m | m.nodes().t.cpu) <= self.resCpu
}
constraint -> class::Task {
  self.placed | mappings.put->filter(m | m.nodes().t == self)->sum(m | 1) == 1
}
constraint -> class::Server {
  mappings.put->filter(m | m.nodes().s == self)->sum(m | m.nodes().t.cpu) <= 5
  | mappings.put->filter(m | m.nodes().s == self)->sum(m | 1) <= 2
}
objective fill -> mapping::put { self.nodes().t.cpu }
global objective : max { fill }
"""

mm, g = load_model(DOC)
spec = typecheck(parse(SPEC), mm)
problem, table = generate(spec, g)
print(dump_problem(problem, table))

aux = [v for v in problem.variables if v.kind == "auxiliary-binary"]
print(f"{len(aux)} auxiliary indicator variables for the disjunction\n")

status, bound = lp_relaxation(problem)
sol = solve(problem)
oracle = brute_force(problem)
print(f"relaxation bound  {bound:.4f}")
print(f"branch and bound  {sol.objective_value:.4f} "
      f"({sol.stats['nodes']} nodes)")
print(f"enumeration       {oracle.objective_value:.4f} "
      f"({oracle.stats['nodes']} assignments)")
assert abs(sol.objective_value - oracle.objective_value) <= 1e-9

chosen = [v for v, val in sol.assignment.items() if val == 1 and v in table]
print("chosen matches:", [table.match_of(v)[1].binding for v in chosen])

again = import_lp(export_lp(problem, table))
print("\nLP round-trip:", "ok" if problems_equal(problem, again) else "FAILED")

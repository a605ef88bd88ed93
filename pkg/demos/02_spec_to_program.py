"""From a declarative spec to a binary program.

The classic two-candidates situation: one virtual link can go onto either of
two substrate links. The compiler instantiates one binary variable per match,
one capacity row per substrate link (the coefficient is the demanded
bandwidth), and one exactly-once row for the virtual link.
"""

from graphilp import dump_problem, export_lp, generate
from graphilp.vne_model import two_links_model, two_links_spec

mm, g = two_links_model()
spec = two_links_spec()

problem, table = generate(spec, g)
print("generated program:\n")
print(dump_problem(problem, table))

print("variable <-> match table:")
for var_id, (mapping, match) in table.items():
    print(f"  {var_id} = choose {mapping} at {match.binding}")

print("\ncapacity coefficients equal the virtual link's bandwidth "
      f"({g.attr('v11', 'bw')} on both rows).")

print("\nthe same program as an LP file:\n")
print(export_lp(problem, table))

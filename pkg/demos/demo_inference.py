"""Walk through the inference engine on a small hand-written program.

Shows interval annotations, rule delays, immediate cascades, and the trace
that explains every derived bound.
"""

from gapsim import export_trace, fixpoint, init_interpretation, parse_program
from gapsim.lang import Literal

PROGRAM = """
# A tiny supply-chain example: a depot is operational while it has power
# and stock; losing power shuts it down two ticks later.
horizon 6
node depot
node generator

fact power(depot):[1.0,1.0] @ 0
fact stock(depot):[1.0,1.0] @ 0
fact power(depot):[1.0,1.0] @ 1
fact stock(depot):[1.0,1.0] @ 1
fact power(depot):[0.0,0.0] @ 2
fact stock(depot):[1.0,1.0] @ 2

rule up immediate dt 0: operational(X):[1.0,1.0] <- power(X):[1.0,1.0], stock(X):[1.0,1.0]
rule down dt 2: operational(X):[0.0,0.0] <- power(X):[0.0,0.0]
"""


def main() -> None:
    program = parse_program(PROGRAM, "demo_inference.gap")
    interp, report = fixpoint(program, init_interpretation(program))
    print(f"fixpoint reached in {report.iterations} sweeps, {report.changed} changes\n")
    lit = Literal("operational", ("depot",))
    for t in range(program.horizon + 1):
        print(f"t={t}: operational(depot) = {interp.read(lit, t)}")
    print("\nfull trace:")
    print(export_trace(interp.records))


if __name__ == "__main__":
    main()

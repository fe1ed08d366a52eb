"""Build QUBO problems, evaluate them exactly, and hop between Ising and QUBO form.

Run:  python demos/01_qubo_basics.py
"""

import numpy as np

from qubocim import (IsingModel, QuboProblem, brute_force_minimize, energy,
                     ising_energy, ising_to_qubo, qubo_to_ising, sparsity, qubo)

print("=== A two-variable QUBO by hand ===")
# minimize 2*x0*x1 - x0 - x1: the Max-Cut objective of a single edge
problem = QuboProblem(n=2, offdiag={(0, 1): 2.0}, linear=[-1.0, -1.0])
for bits in ([0, 0], [0, 1], [1, 0], [1, 1]):
    print(f"  E{tuple(bits)} = {energy(problem, bits):+.1f}")

x, e, multiplicity = brute_force_minimize(problem)
print(f"  exhaustive minimum: E = {e} at x = {list(x)} ({multiplicity} minimizers)")

print("\n=== Ising <-> QUBO round trip ===")
rng = np.random.default_rng(1)
model = IsingModel(
    n=5,
    couplings={(i, j): float(rng.normal()) for i in range(5) for j in range(i + 1, 5)
               if rng.random() < 0.5},
    fields=rng.normal(size=5),
)
as_qubo = ising_to_qubo(model)
back = qubo_to_ising(as_qubo)
spins = np.array([1, -1, 1, 1, -1])
bits = (1 - spins) // 2
print(f"  ising energy      : {ising_energy(model, spins):+.6f}")
print(f"  qubo energy       : {energy(as_qubo, bits):+.6f}")
print(f"  round-trip energy : {ising_energy(back, spins):+.6f}")

print("\n=== Sparsity and text serialization ===")
print(f"  sparsity of the converted model: {sparsity(as_qubo):.3f}")
text = qubo.to_text(problem)
print("  serialized single-edge problem:")
for line in text.splitlines():
    print("   |", line)
restored = qubo.from_text(text)
print(f"  round trip exact: {restored.offdiag == problem.offdiag}")

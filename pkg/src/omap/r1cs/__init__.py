"""Constraint systems, gadgets, the JoinSplit circuit and the mock backend."""

from .backend import Proof, ProofRefused, ProvingKey, SetupParams, VerifyingKey, prove, setup, verify
from .circuit import JoinSplitCircuit, build_joinsplit_circuit, is_satisfiable, synthesize
from .cs import LC, Constraint, ConstraintSystem, UnsatisfiedError

__all__ = [
    "LC", "Constraint", "ConstraintSystem", "UnsatisfiedError",
    "JoinSplitCircuit", "build_joinsplit_circuit", "is_satisfiable", "synthesize",
    "Proof", "ProofRefused", "ProvingKey", "SetupParams", "VerifyingKey", "prove", "setup", "verify",
]

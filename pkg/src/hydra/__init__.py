"""Runtime for statically correct code generation.

Runs an incremental checker asynchronously alongside a token generator,
maintains a search tree of validated prefixes with checkpoint-and-rollback,
and drives repair through pluggable policies.
"""

__version__ = "0.1.0"

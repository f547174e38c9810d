"""SPARQL basic-graph-pattern evaluation over RDF using sparse-matrix storage.

Pipeline: :func:`parse_ntriples` / :func:`encode` build the triple store,
:func:`parse_query` and :func:`plan_query` turn a query into grouped
traversal levels, and :func:`run_query` partitions the compressed storage
over workers, evaluates, prunes and enumerates the answers.
:func:`brute_force` is the reference evaluator.
"""

from .engine import Dataset, QueryRun, run_query
from .executor import ExecStats, LightResult, SufficiencyError, eval_light, eval_vertex_group, run_all, run_worker
from .lspm import LspmCsc, LspmCsr, build_csc, build_csr, col_slice, dump_lspm, load_lspm, row_slice
from .oracle import BudgetExceeded, brute_force
from .partition import (
    NodeAssignment,
    PartitionSpec,
    Partitioning,
    partition,
    partition_first_stage,
    partition_next_stage,
    partition_with_constants,
)
from .planner import PlanModeError, QueryPlan, plan_degree, plan_direction, plan_query
from .query import QueryGraph, QuerySyntaxError, UnsupportedFeatureError, classify_edges, parse_query
from .rdf import Dictionary, NTriplesSyntaxError, TripleSet, encode, filter_predicates, parse_ntriples
from .trees import (
    BindingTree,
    SolutionSet,
    TreeNode,
    enumerate_solutions,
    global_prune,
    local_prune,
    select_postprocessing,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

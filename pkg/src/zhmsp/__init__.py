"""Labeled multi-stage graphs, the ZH compact-kernel procedure, SAT reductions and oracles."""

from .edgeset import EdgeSet
from .graph import (BadLabel, DanglingEdge, GraphError, MalformedStage, MultiStageGraph,
                    Violation, build_graph, check_properties, is_omega_path, is_sigma_path,
                    restrict, slice_edges, validate_2msp)
from .kernel import (InvalidInstance, KernelInvariantError, TraceEvent, ZHResult, chi,
                     compact_kernel, init_rmap, preprocess, psi, rho, zh_solve)
from .oracle import (Answer, OracleBudget, enumerate_sigma_paths, find_sigma_path,
                     sat_brute_force, sigma_path_exists)
from .reduction import (CnfFormula, cnf_to_msp, decode_assignment, emit_dimacs,
                        gadgetize_2msp, parse_dimacs, reduce_full)
from .generators import (SeededRng, derive_seed, gen_fn_mu, gen_pigeonhole, gen_random_ksat,
                         gen_random_msp, split_clauses)

__version__ = "0.1.0"

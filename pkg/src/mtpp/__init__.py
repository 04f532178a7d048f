"""Pipeline partitioning of computation graphs with certified lower bounds."""

from .graph import (BlockCostBreakdown, ComputationGraph, GraphFormatError,
                    InfeasiblePartitionError, NodeSpec, Partition,
                    PlatformConfig, block_cost, io_cost, load_graph_json,
                    mtpp_objective, overflow_cost, quotient_is_acyclic,
                    save_graph_json, validate_graph)
from .segment import Fenwick2D, SegmentCostStructure, init_fast, init_naive
from .slicing import (CycleError, Segmentation, TopologicalOrder, decode,
                      kahn_with_priorities, slice_graph)
from .search import (BrkgaParams, SearchResult, brkga_params_for_budget,
                     brkga_run, mla_objective, mla_search, random_search)
from .bounds import (BoundCertificate, InstanceTooLargeError, MipConstraint,
                     MipModel, MipVariable, build_bottleneck_mip,
                     build_exact_mip, build_guess_mip, emit_lp,
                     export_bounds_csv, import_external_bounds,
                     optimize_model_by_enumeration, simple_lower_bound,
                     solve_bottleneck_oracle, solve_guess_oracle,
                     solve_small_exact)
from .datagen import (GenParams, adversarial_pairing_graph,
                      generate_regal_like, generate_small_random_dag,
                      write_corpus)
from .reporting import (ReportTable, approximation_ratio_table,
                        geometric_mean, scaled_bound_table)

__version__ = "0.1.0"

//! Block partitioning of the mesh nodes and the thread-parallel solve.

mod comm;
mod distributed;
mod local;
mod plan;

pub use comm::{run_ranks, Comm};
pub use distributed::{distributed_matvec, solve_distributed, LocalOps, RankStats};
pub use local::{build_local, face_owner, tet_owner, HaloSchedule, LocalSubcomplex, NeighborLists};
pub use plan::{block_partition, PartitionPlan};

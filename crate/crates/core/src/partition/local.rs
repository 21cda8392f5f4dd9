//! Per-rank sub-complexes with ghost layers.
//!
//! Ownership rules:
//! - a node (Voronoi cell) belongs to the rank whose block contains it;
//! - a tet belongs to the owner of its lowest-numbered node;
//! - a face's flux unknown belongs to the lowest rank owning one of the
//!   face's tets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::complex::SimplicialComplex;
use crate::error::{DecError, Result};

use super::comm::Comm;
use super::plan::PartitionPlan;

pub fn tet_owner(complex: &SimplicialComplex, plan: &PartitionPlan, tet: usize) -> usize {
    plan.owner(complex.tets[tet].vertices[0])
}

pub fn face_owner(complex: &SimplicialComplex, plan: &PartitionPlan, face: usize) -> usize {
    complex.face_tets[face]
        .iter()
        .map(|(t, _)| tet_owner(complex, plan, t))
        .min()
        .expect("every face has a tet")
}

/// Send and receive lists for one neighbouring rank, as local indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborLists {
    pub rank: usize,
    /// Owned entries whose values the neighbour needs, by ascending global id.
    pub send: Vec<usize>,
    /// Ghost entries filled from the neighbour, by ascending global id.
    pub recv: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HaloSchedule {
    pub neighbors: Vec<NeighborLists>,
}

impl HaloSchedule {
    /// Copies owned values to the neighbours' ghost slots and fills this
    /// rank's ghost slots. Owned entries are not modified.
    pub fn exchange(&self, comm: &Comm, values: &mut [f64]) -> Result<()> {
        let tag = comm.next_tag();
        for n in &self.neighbors {
            let buf = n.send.iter().map(|&i| values[i]).collect();
            comm.send(n.rank, tag, buf)?;
        }
        for n in &self.neighbors {
            let buf = comm.recv(n.rank, tag)?;
            if buf.len() != n.recv.len() {
                return Err(DecError::Comm(format!(
                    "rank {} expected {} values from rank {}, got {}",
                    comm.rank(),
                    n.recv.len(),
                    n.rank,
                    buf.len()
                )));
            }
            for (&i, v) in n.recv.iter().zip(buf) {
                values[i] = v;
            }
        }
        Ok(())
    }

    pub fn neighbor(&self, rank: usize) -> Option<&NeighborLists> {
        self.neighbors.iter().find(|n| n.rank == rank)
    }
}

/// What one rank holds of the global complex.
///
/// Local tet vectors are laid out as owned tets followed by ghost tets,
/// local face vectors as owned faces followed by ghost faces, each part in
/// ascending global order.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSubcomplex {
    pub rank: usize,
    pub owned_tets: Vec<usize>,
    /// Off-rank tets sharing a face with an owned tet.
    pub ghost_tets: Vec<usize>,
    pub owned_faces: Vec<usize>,
    /// Faces of owned tets whose flux is owned elsewhere.
    pub ghost_faces: Vec<usize>,
    /// Nodes of owned and ghost tets.
    pub nodes: Vec<usize>,
    pub tet_halo: HaloSchedule,
    pub face_halo: HaloSchedule,
    tet_local: HashMap<usize, usize>,
    face_local: HashMap<usize, usize>,
}

impl LocalSubcomplex {
    pub fn n_local_tets(&self) -> usize {
        self.owned_tets.len() + self.ghost_tets.len()
    }

    pub fn n_local_faces(&self) -> usize {
        self.owned_faces.len() + self.ghost_faces.len()
    }

    pub fn local_tet(&self, global: usize) -> Option<usize> {
        self.tet_local.get(&global).copied()
    }

    pub fn local_face(&self, global: usize) -> Option<usize> {
        self.face_local.get(&global).copied()
    }

    pub fn global_tets(&self) -> impl Iterator<Item = usize> + '_ {
        self.owned_tets.iter().chain(&self.ghost_tets).copied()
    }

    pub fn global_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.owned_faces.iter().chain(&self.ghost_faces).copied()
    }
}

fn index_map(owned: &[usize], ghost: &[usize]) -> HashMap<usize, usize> {
    owned.iter().chain(ghost).enumerate().map(|(l, &g)| (g, l)).collect()
}

fn schedule(
    sends: BTreeMap<usize, BTreeSet<usize>>,
    recvs: BTreeMap<usize, BTreeSet<usize>>,
    local: &HashMap<usize, usize>,
) -> HaloSchedule {
    let ranks: BTreeSet<usize> = sends.keys().chain(recvs.keys()).copied().collect();
    HaloSchedule {
        neighbors: ranks
            .into_iter()
            .map(|rank| NeighborLists {
                rank,
                send: sends.get(&rank).into_iter().flatten().map(|g| local[g]).collect(),
                recv: recvs.get(&rank).into_iter().flatten().map(|g| local[g]).collect(),
            })
            .collect(),
    }
}

/// Extracts the sub-complex of `rank` from the global complex.
pub fn build_local(complex: &SimplicialComplex, plan: &PartitionPlan, rank: usize) -> Result<LocalSubcomplex> {
    if rank >= plan.n_ranks() {
        return Err(DecError::InvalidArgument(format!(
            "rank {rank} out of range for {} ranks",
            plan.n_ranks()
        )));
    }
    if plan.n_cells() != complex.n_nodes() {
        return Err(DecError::InvalidArgument(format!(
            "plan covers {} cells, complex has {} nodes",
            plan.n_cells(),
            complex.n_nodes()
        )));
    }
    let owner: Vec<usize> = (0..complex.n_tets()).map(|t| tet_owner(complex, plan, t)).collect();
    let fowner = |f: usize| complex.face_tets[f].iter().map(|(t, _)| owner[t]).min().unwrap();

    let owned_tets: Vec<usize> = (0..complex.n_tets()).filter(|&t| owner[t] == rank).collect();
    let mut ghost_tets = BTreeSet::new();
    let mut local_faces = BTreeSet::new();
    let mut tet_sends: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut tet_recvs: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &t in &owned_tets {
        for &f in &complex.tet_faces[t] {
            local_faces.insert(f);
            for (u, _) in complex.face_tets[f].iter() {
                if owner[u] != rank {
                    ghost_tets.insert(u);
                    tet_recvs.entry(owner[u]).or_default().insert(u);
                    tet_sends.entry(owner[u]).or_default().insert(t);
                }
            }
        }
    }

    let mut owned_faces = Vec::new();
    let mut ghost_faces = Vec::new();
    let mut face_sends: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut face_recvs: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &f in &local_faces {
        let o = fowner(f);
        if o == rank {
            owned_faces.push(f);
            for (u, _) in complex.face_tets[f].iter() {
                if owner[u] != rank {
                    face_sends.entry(owner[u]).or_default().insert(f);
                }
            }
        } else {
            ghost_faces.push(f);
            face_recvs.entry(o).or_default().insert(f);
        }
    }

    let ghost_tets: Vec<usize> = ghost_tets.into_iter().collect();
    let tet_local = index_map(&owned_tets, &ghost_tets);
    let face_local = index_map(&owned_faces, &ghost_faces);
    let nodes: BTreeSet<usize> = owned_tets
        .iter()
        .chain(&ghost_tets)
        .flat_map(|&t| complex.tets[t].vertices)
        .collect();

    Ok(LocalSubcomplex {
        rank,
        tet_halo: schedule(tet_sends, tet_recvs, &tet_local),
        face_halo: schedule(face_sends, face_recvs, &face_local),
        owned_tets,
        ghost_tets,
        owned_faces,
        ghost_faces,
        nodes: nodes.into_iter().collect(),
        tet_local,
        face_local,
    })
}

//! Dirichlet elimination and master–slave periodic reduction.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::fem::sparse::CsrMatrix;

/// A square system `A x = b` over mesh nodes.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.dim() != rhs.len() {
            return Err(Error::Argument(format!(
                "matrix is {0} x {0} but rhs has {1} entries",
                matrix.dim(),
                rhs.len()
            )));
        }
        Ok(Self { matrix, rhs })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dof {
    Free(usize),
    Fixed(f64),
}

/// Maps every node to a reduced unknown or a prescribed value.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dofs: Vec<Dof>,
    n_free: usize,
}

impl DofMap {
    pub fn identity(n: usize) -> Self {
        Self {
            dofs: (0..n).map(Dof::Free).collect(),
            n_free: n,
        }
    }

    /// Dirichlet values on `nodes` and, optionally, slaves merged into masters.
    pub fn build(n: usize, fixed: &[(usize, f64)], pairs: &[(usize, usize)]) -> Result<Self> {
        let mut parent: Vec<usize> = (0..n).collect();
        let mut seen = HashSet::new();
        for &(master, slave) in pairs {
            if master >= n || slave >= n {
                return Err(Error::Constraint(format!("pair ({master}, {slave}) outside {n} nodes")));
            }
            if master == slave {
                return Err(Error::Constraint(format!("node {master} paired with itself")));
            }
            if !seen.insert(slave) {
                return Err(Error::Constraint(format!(
                    "slave node {slave} appears in more than one pair"
                )));
            }
            parent[slave] = master;
        }
        let root = |mut i: usize| -> Result<usize> {
            for _ in 0..=n {
                if parent[i] == i {
                    return Ok(i);
                }
                i = parent[i];
            }
            Err(Error::Constraint("periodic pairs form a cycle".into()))
        };
        let roots = (0..n).map(root).collect::<Result<Vec<_>>>()?;

        let mut prescribed: Vec<Option<f64>> = vec![None; n];
        for &(node, value) in fixed {
            if node >= n {
                return Err(Error::Constraint(format!("Dirichlet node {node} outside {n} nodes")));
            }
            if !value.is_finite() {
                return Err(Error::Constraint(format!(
                    "Dirichlet value at node {node} is not finite"
                )));
            }
            let r = roots[node];
            match prescribed[r] {
                Some(v) if v != value => {
                    return Err(Error::Constraint(format!(
                        "conflicting Dirichlet values on node {node}"
                    )));
                }
                _ => prescribed[r] = Some(value),
            }
        }

        let mut index = vec![usize::MAX; n];
        let mut n_free = 0;
        for i in 0..n {
            if roots[i] == i && prescribed[i].is_none() {
                index[i] = n_free;
                n_free += 1;
            }
        }
        let dofs = (0..n)
            .map(|i| {
                let r = roots[i];
                match prescribed[r] {
                    Some(v) => Dof::Fixed(v),
                    None => Dof::Free(index[r]),
                }
            })
            .collect();
        Ok(Self { dofs, n_free })
    }

    pub fn node_count(&self) -> usize {
        self.dofs.len()
    }

    pub fn free_count(&self) -> usize {
        self.n_free
    }

    pub fn dof(&self, node: usize) -> Dof {
        self.dofs[node]
    }

    /// Node values from reduced unknowns.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.n_free, "reduced vector length mismatch");
        self.dofs
            .iter()
            .map(|d| match *d {
                Dof::Free(k) => reduced[k],
                Dof::Fixed(v) => v,
            })
            .collect()
    }
}

/// The system after constraint elimination together with its expansion map.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub system: LinearSystem,
    pub map: DofMap,
}

impl ReducedSystem {
    /// `P^T A P` restricted to free unknowns; fixed columns move to the rhs.
    pub fn new(full: &LinearSystem, map: DofMap) -> Result<Self> {
        let n = full.matrix.dim();
        if map.node_count() != n {
            return Err(Error::Constraint(format!(
                "dof map covers {} nodes, system has {n}",
                map.node_count()
            )));
        }
        let mut rhs = vec![0.0; map.free_count()];
        let mut trips = Vec::with_capacity(full.matrix.nnz());
        for i in 0..n {
            let Dof::Free(ri) = map.dof(i) else { continue };
            rhs[ri] += full.rhs[i];
            for (j, v) in full.matrix.row(i) {
                match map.dof(j) {
                    Dof::Free(rj) => trips.push((ri, rj, v)),
                    Dof::Fixed(value) => rhs[ri] -= v * value,
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(map.free_count(), trips, full.matrix.is_symmetric_flagged());
        Ok(Self {
            system: LinearSystem { matrix, rhs },
            map,
        })
    }

    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        self.map.expand(reduced)
    }
}

/// Eliminates `nodes` with prescribed `values`; an empty set is a no-op.
pub fn apply_dirichlet(full: &LinearSystem, nodes: &[usize], values: &[f64]) -> Result<ReducedSystem> {
    if nodes.len() != values.len() {
        return Err(Error::Constraint(format!(
            "{} Dirichlet nodes but {} values",
            nodes.len(),
            values.len()
        )));
    }
    let fixed: Vec<(usize, f64)> = nodes.iter().copied().zip(values.iter().copied()).collect();
    let map = DofMap::build(full.matrix.dim(), &fixed, &[])?;
    ReducedSystem::new(full, map)
}

/// Merges each slave into its master.
pub fn apply_periodic(full: &LinearSystem, pairs: &[(usize, usize)]) -> Result<ReducedSystem> {
    let map = DofMap::build(full.matrix.dim(), &[], pairs)?;
    ReducedSystem::new(full, map)
}

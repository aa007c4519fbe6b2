use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::{Error, Result};

/// Which pivots a factorization accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    /// Every pivot must be positive.
    Positive,
    /// Any nonzero pivot; symmetric quasi-definite matrices factor stably
    /// under every symmetric permutation.
    QuasiDefinite,
}

/// Envelope (skyline) `P A Pᵀ = L D Lᵀ` factorization with a reverse
/// Cuthill-McKee ordering. Rows of `L` are stored from their first nonzero
/// to the diagonal.
#[derive(Debug, Clone)]
pub struct SkylineLdl {
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineLdl {
    pub fn factor(a: &CsrMatrix, kind: Definiteness) -> Result<Self> {
        let n = a.nrows();
        Error::check_len(n, a.ncols())?;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for &c in a.pattern_neighbors(old) {
                let j = inv[c];
                if j < i && j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; offsets[n]];
        let mut diag = vec![0.0; n];
        for old in 0..n {
            let i = inv[old];
            for (c, v) in a.row(old) {
                let j = inv[c];
                if j < i {
                    lower[offsets[i] + j - first[i]] = v;
                } else if j == i {
                    diag[i] = v;
                }
            }
        }

        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        // row-oriented Crout: t_j = L_ij D_j is held in `lower` until row i is done
        for i in 0..n {
            let fi = first[i];
            let row_i = offsets[i];
            for j in fi..i {
                let fj = first[j];
                let row_j = offsets[j];
                let k0 = fi.max(fj);
                let mut s = lower[row_i + j - fi];
                for k in k0..j {
                    s -= lower[row_i + k - fi] * lower[row_j + k - fj];
                }
                lower[row_i + j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let t = lower[row_i + j - fi];
                let l = t / diag[j];
                d -= t * l;
                lower[row_i + j - fi] = l;
            }
            match kind {
                Definiteness::Positive if !(d > 1e-14 * scale) => {
                    return Err(Error::NotPositiveDefinite { pivot: perm[i] });
                }
                _ if !(d.abs() > 1e-300) || !d.is_finite() => {
                    return Err(Error::Singular { pivot: perm[i] });
                }
                _ => {}
            }
            diag[i] = d;
        }
        Ok(SkylineLdl {
            perm,
            first,
            offsets,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.lower[self.offsets[i]..self.offsets[i + 1]];
            for (l, v) in row.iter().zip(&mut y[fi..i]) {
                *v -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Number of negative pivots (inertia of the factored matrix).
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|d| **d < 0.0).count()
    }
}

fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.pattern_neighbors(i).len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral_node(a, seed, &degree);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a
                .pattern_neighbors(v)
                .iter()
                .copied()
                .filter(|&u| !visited[u])
                .collect();
            nbrs.sort_by_key(|&u| (degree[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Last node of a BFS from `seed`, repeated twice: a cheap pseudo-peripheral node.
fn peripheral_node(a: &CsrMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut start = seed;
    for _ in 0..2 {
        let mut dist = alloc::collections::BTreeMap::new();
        let mut queue = VecDeque::new();
        dist.insert(start, 0usize);
        queue.push_back(start);
        let mut far = (0usize, start);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d > far.0 || (d == far.0 && degree[v] < degree[far.1]) {
                far = (d, v);
            }
            for &u in a.pattern_neighbors(v) {
                if let alloc::collections::btree_map::Entry::Vacant(slot) = dist.entry(u) {
                    slot.insert(d + 1);
                    queue.push_back(u);
                }
            }
        }
        start = far.1;
    }
    start
}

//! Symmetric skyline (envelope) storage with LDL^T factorization.
//!
//! The finite-element tangents are symmetric with a banded-ish profile after
//! reverse Cuthill-McKee ordering; an envelope factorization covers that
//! without general sparse machinery. Pivots must stay positive: the Newton
//! driver adds a diagonal shift and refactors when they do not, which keeps
//! every solve a descent direction.

/// Lower-triangle envelope storage: row `i` holds columns
/// `first_col[i] ..= i` contiguously.
#[derive(Clone, Debug)]
pub struct Skyline {
    n: usize,
    first_col: Vec<usize>,
    row_start: Vec<usize>,
    vals: Vec<f64>,
}

/// LDL^T factor sharing the pattern of the source matrix.
pub struct SkylineFactor {
    n: usize,
    first_col: Vec<usize>,
    row_start: Vec<usize>,
    /// Unit-lower entries, diagonal positions hold D.
    lv: Vec<f64>,
}

impl Skyline {
    /// Build from per-row first coupled columns (must satisfy
    /// `first_col[i] <= i`).
    pub fn from_profile(first_col: Vec<usize>) -> Self {
        let n = first_col.len();
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for (i, &fc) in first_col.iter().enumerate() {
            debug_assert!(fc <= i);
            row_start.push(row_start[i] + (i - fc + 1));
        }
        let vals = vec![0.0; row_start[n]];
        Skyline {
            n,
            first_col,
            row_start,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn clear(&mut self) {
        self.vals.fill(0.0);
    }

    /// Accumulate into entry (i, j); requires `j <= i` inside the profile.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && j >= self.first_col[i], "({i},{j}) outside profile");
        let idx = self.row_start[i] + (j - self.first_col[i]);
        self.vals[idx] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if j < self.first_col[i] {
            return 0.0;
        }
        self.vals[self.row_start[i] + (j - self.first_col[i])]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in self.first_col[i]..=i {
                let v = self.get(i, j);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.n)
            .map(|i| self.get(i, i).abs())
            .fold(f64::MIN_POSITIVE, f64::max)
    }

    /// LDL^T with a diagonal shift. Fails (returning the offending row) as
    /// soon as a pivot drops below `pivot_floor`.
    pub fn factor_ldlt(&self, shift: f64, pivot_floor: f64) -> Result<SkylineFactor, usize> {
        let n = self.n;
        let mut lv = self.vals.clone();
        if shift != 0.0 {
            for i in 0..n {
                lv[self.row_start[i] + (i - self.first_col[i])] += shift;
            }
        }
        // Row-oriented Doolittle on the envelope. `lw` keeps L_ik * D_k for
        // the current row.
        let mut lw = vec![0.0; n];
        for i in 0..n {
            let fci = self.first_col[i];
            let ri = self.row_start[i];
            for j in fci..i {
                let fcj = self.first_col[j];
                let rj = self.row_start[j];
                let lo = fci.max(fcj);
                let mut s = lv[ri + (j - fci)];
                // dot(lw[lo..j], Lrow_j[lo..j])
                let lrow = &lv[rj + (lo - fcj)..rj + (j - fcj)];
                let wrow = &lw[lo..j];
                for (a, b) in lrow.iter().zip(wrow) {
                    s -= a * b;
                }
                // s equals L_ij * D_j here.
                lw[j] = s;
                let dj = lv[rj + (j - fcj)];
                lv[ri + (j - fci)] = s / dj;
            }
            let mut d = lv[ri + (i - fci)];
            for k in fci..i {
                d -= lw[k] * lv[ri + (k - fci)];
            }
            if !(d > pivot_floor) {
                return Err(i);
            }
            lv[ri + (i - fci)] = d;
        }
        Ok(SkylineFactor {
            n,
            first_col: self.first_col.clone(),
            row_start: self.row_start.clone(),
            lv,
        })
    }
}

impl SkylineFactor {
    /// Solve `L D L^T x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let fc = self.first_col[i];
            let r = self.row_start[i];
            let mut s = b[i];
            let lrow = &self.lv[r..r + (i - fc)];
            for (k, l) in lrow.iter().enumerate() {
                s -= l * b[fc + k];
            }
            b[i] = s;
        }
        for i in 0..n {
            let d = self.lv[self.row_start[i] + (i - self.first_col[i])];
            b[i] /= d;
        }
        for i in (0..n).rev() {
            let fc = self.first_col[i];
            let r = self.row_start[i];
            let xi = b[i];
            let lrow = &self.lv[r..r + (i - fc)];
            for (k, l) in lrow.iter().enumerate() {
                b[fc + k] -= l * xi;
            }
        }
    }
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut nodes: Vec<usize> = (0..n).collect();
    // Start from lowest-degree nodes of each component.
    nodes.sort_by_key(|&v| adj[v].len());
    for &start in &nodes {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_by_key(|&u| adj[u].len());
            for u in nbrs {
                if !visited[u] {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order.reverse();
    order
}

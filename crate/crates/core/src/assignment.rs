//! Minimum-cost bipartite assignment (Hungarian method, shortest augmenting
//! paths with potentials, O(n^2 m)).

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "cost matrix shape");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Stand-in for non-finite entries, so they are chosen only when forced.
const BIG: f64 = 1e12;

/// Row-to-column pairs of a minimum-total-cost assignment that covers
/// `min(rows, cols)` pairs, sorted by row.
pub fn min_cost_matching(cost: &CostMatrix) -> Vec<(usize, usize)> {
    let (n, m) = (cost.rows, cost.cols);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let transposed = n > m;
    let (n, m) = if transposed { (m, n) } else { (n, m) };
    let at = |i: usize, j: usize| {
        let v = if transposed { cost.get(j, i) } else { cost.get(i, j) };
        if v.is_finite() {
            v
        } else {
            BIG
        }
    };

    // 1-based; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| {
            let (i, j) = (owner[j] - 1, j - 1);
            if transposed {
                (j, i)
            } else {
                (i, j)
            }
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// Optimal assignment, then any pair costing more than `1 - gate` is
/// released. With costs `1 - IoU`, `gate` is the minimum IoU of a match.
pub fn assign(cost: &CostMatrix, gate: f64) -> Assignment {
    let limit = 1.0 - gate;
    let matches: Vec<(usize, usize)> = min_cost_matching(cost)
        .into_iter()
        .filter(|&(r, c)| cost.get(r, c) <= limit)
        .collect();
    let mut row_used = vec![false; cost.rows];
    let mut col_used = vec![false; cost.cols];
    for &(r, c) in &matches {
        row_used[r] = true;
        col_used[c] = true;
    }
    Assignment {
        unmatched_rows: (0..cost.rows).filter(|&r| !row_used[r]).collect(),
        unmatched_cols: (0..cost.cols).filter(|&c| !col_used[c]).collect(),
        matches,
    }
}

//! Compressed sparse row matrices and Jacobi-preconditioned conjugate
//! gradients.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Duplicates are added in input order, so the
    /// result does not depend on anything but the triplet sequence.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut staged = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            staged[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n_rows {
            let row = &mut staged[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                cols.push(j);
                vals.push(sum);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Rows and columns restricted to the given index maps
    /// (`map[k] = Some(new index)`).
    pub fn submatrix(&self, row_map: &[Option<usize>], col_map: &[Option<usize>]) -> CsrMatrix {
        let n_rows = row_map.iter().flatten().count();
        let n_cols = col_map.iter().flatten().count();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut order: Vec<(usize, usize)> = row_map
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|r| (r, i)))
            .collect();
        order.sort_unstable();
        for (_, i) in order {
            let mut entries: Vec<(usize, f64)> = self
                .row(i)
                .filter_map(|(j, v)| col_map[j].map(|c| (c, v)))
                .collect();
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration (index 0 = initial).
    pub history: Vec<f64>,
}

/// `50·√n + 1000`.
pub fn iteration_cap(n: usize) -> usize {
    (50.0 * (n as f64).sqrt()) as usize + 1000
}

/// Solves `A x = b` for symmetric positive-definite `A`, starting from the
/// given `x`. Stops at `‖r‖ <= tol·‖b‖` or after `max_iter` iterations.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> CgOutcome {
    let n = b.len();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = norm(b);
    let mut history = Vec::new();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
            history: vec![0.0],
        };
    }
    let mut ax = vec![0.0; n];
    a.mul_vec(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = norm(&r) / b_norm;
    history.push(rel);
    let mut it = 0;
    while rel > tol && it < max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        rel = norm(&r) / b_norm;
        history.push(rel);
    }
    CgOutcome {
        iterations: it,
        relative_residual: rel,
        converged: rel <= tol,
        history,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

//! Sparse LDLᵀ factorization for symmetric quasi-definite matrices.
//!
//! Quasi-definite matrices are strongly factorizable, so any symmetric
//! permutation works without pivoting. The permutation comes from a
//! deterministic approximate-minimum-degree ordering; pivots that come out with the wrong
//! sign or vanish are replaced by a small value of the expected sign.

const NONE: usize = usize::MAX;

/// Upper triangle of a symmetric matrix in compressed-column form: column
/// `j` holds rows `i ≤ j` in increasing order, diagonal last.
#[derive(Debug, Clone)]
pub struct UpperCsc {
    n: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    pub vals: Vec<f64>,
}

impl UpperCsc {
    /// Builds the storage for a pattern given as `(row, col)` pairs in any
    /// triangle. Diagonals are always included.
    pub fn from_pattern(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for (i, j) in entries {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            cols[c].push(r);
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowind = Vec::new();
        colptr.push(0);
        for col in &mut cols {
            col.sort_unstable();
            col.dedup();
            rowind.extend_from_slice(col);
            colptr.push(rowind.len());
        }
        let nnz = rowind.len();
        UpperCsc {
            n,
            colptr,
            rowind,
            vals: vec![0.0; nnz],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Storage position of element `(i, j)`; either triangle is accepted.
    pub fn position(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let col = &self.rowind[self.colptr[c]..self.colptr[c + 1]];
        let k = col.binary_search(&r).unwrap_or_else(|_| panic!("({r}, {c}) not in the pattern"));
        self.colptr[c] + k
    }

    /// `y = K x` for the symmetric matrix stored here.
    pub fn sym_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                let v = self.vals[p];
                if i == j {
                    acc += v * x[j];
                } else {
                    acc += v * x[i];
                    y[i] += v * x[j];
                }
            }
            y[j] += acc;
        }
    }
}

/// Approximate-minimum-degree ordering of the pattern of `a`. Returns
/// `order[new] = old`.
pub fn fill_reducing_order(a: &UpperCsc) -> Vec<usize> {
    if a.n == 0 {
        return Vec::new();
    }
    let (perm, _, _) = amd::order(a.n, &a.colptr, &a.rowind, &amd::Control::default())
        .expect("an upper-triangular CSC pattern without duplicates is a valid AMD input");
    perm
}

/// Elimination tree, column structure and numeric values of `L` and `D`.
#[derive(Debug, Clone)]
pub struct Ldl {
    n: usize,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    work: Workspace,
}

#[derive(Debug, Clone)]
struct Workspace {
    y: Vec<f64>,
    marked: Vec<bool>,
    next: Vec<usize>,
    pattern: Vec<usize>,
    stack: Vec<usize>,
}

impl Ldl {
    /// Symbolic analysis of the pattern of `a`.
    pub fn analyze(a: &UpperCsc) -> Self {
        let n = a.n;
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for p in a.colptr[j]..a.colptr[j + 1] {
                let mut i = a.rowind[p];
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for i in 0..n {
            lp.push(lp[i] + lnz[i]);
        }
        let total = lp[n];
        Ldl {
            n,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            work: Workspace {
                y: vec![0.0; n],
                marked: vec![false; n],
                next: vec![0; n],
                pattern: Vec::with_capacity(n),
                stack: Vec::with_capacity(n),
            },
        }
    }

    /// Number of stored off-diagonal entries of `L`.
    pub fn nnz(&self) -> usize {
        self.li.len()
    }

    /// Numeric factorization of `a`, which must have the analyzed pattern.
    /// `signs[k]` is the expected sign of pivot `k`; a pivot whose signed
    /// value falls below `eps` is replaced by `±delta`. Returns the number of
    /// replaced pivots.
    pub fn factor(&mut self, a: &UpperCsc, signs: &[f64], eps: f64, delta: f64) -> usize {
        let n = self.n;
        let mut fixed = 0;
        let Workspace {
            y,
            marked,
            next,
            pattern,
            stack,
        } = &mut self.work;
        next.copy_from_slice(&self.lp[..n]);
        for k in 0..n {
            // Row k of L: solve L(0:k, 0:k)·D·y = A(0:k, k).
            pattern.clear();
            let mut dk = 0.0;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let i = a.rowind[p];
                if i == k {
                    dk = a.vals[p];
                    continue;
                }
                y[i] = a.vals[p];
                let mut node = i;
                stack.clear();
                while node != NONE && node < k && !marked[node] {
                    marked[node] = true;
                    stack.push(node);
                    node = self.etree[node];
                }
                while let Some(v) = stack.pop() {
                    pattern.push(v);
                }
            }
            for &c in pattern.iter().rev() {
                let yc = y[c];
                for q in self.lp[c]..next[c] {
                    y[self.li[q]] -= self.lx[q] * yc;
                }
                let l = yc / self.d[c];
                self.li[next[c]] = k;
                self.lx[next[c]] = l;
                next[c] += 1;
                dk -= yc * l;
                y[c] = 0.0;
                marked[c] = false;
            }
            if !(signs[k] * dk >= eps) {
                dk = signs[k] * delta;
                fixed += 1;
            }
            self.d[k] = dk;
        }
        fixed
    }

    /// Solves `L D Lᵀ x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let bi = b[i];
            if bi != 0.0 {
                for p in self.lp[i]..self.lp[i + 1] {
                    b[self.li[p]] -= self.lx[p] * bi;
                }
            }
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for p in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[p] * b[self.li[p]];
            }
            b[i] = s;
        }
    }
}

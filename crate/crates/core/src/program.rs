//! Standard-form convex quadratic programs with labelled rows.
//!
//! ```text
//! minimize    ½·xᵀQx + qᵀx + c
//! subject to  A x = b      (equality rows, duals y)
//!             G x ≤ h      (inequality rows, duals z ≥ 0)
//! ```
//!
//! Duals follow the Lagrangian `L = ½xᵀQx + qᵀx + yᵀ(Ax − b) + zᵀ(Gx − h)`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowRef {
    Eq(usize),
    Ineq(usize),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QuadraticProgram {
    names: Vec<String>,
    #[serde(skip)]
    name_index: HashMap<String, usize>,
    /// Upper-triangle entries `(i, j, Q_ij)` with `i ≤ j`; duplicates add up.
    pub quad: Vec<(usize, usize, f64)>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub eq_rows: Vec<Row>,
    pub ineq_rows: Vec<Row>,
    #[serde(skip)]
    row_index: HashMap<String, RowRef>,
    /// Sorted column indices restricted to {0, 1}.
    pub binaries: Vec<usize>,
}

impl QuadraticProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        let idx = self.names.len();
        let prev = self.name_index.insert(name.clone(), idx);
        assert!(prev.is_none(), "duplicate variable name {name}");
        self.names.push(name);
        self.linear.push(0.0);
        idx
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        let idx = self.add_var(name);
        self.binaries.push(idx);
        idx
    }

    pub fn var_name(&self, j: usize) -> &str {
        &self.names[j]
    }

    pub fn var_names(&self) -> &[String] {
        &self.names
    }

    pub fn var(&self, name: &str) -> Result<usize> {
        self.name_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.name_index.contains_key(name)
    }

    pub fn add_quad(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            self.quad.push((a, b, v));
        }
    }

    pub fn add_linear(&mut self, j: usize, v: f64) {
        self.linear[j] += v;
    }

    fn register_row(&mut self, label: &str, r: RowRef) {
        let prev = self.row_index.insert(label.to_string(), r);
        assert!(prev.is_none(), "duplicate row label {label}");
    }

    pub fn add_eq(&mut self, label: impl Into<String>, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        let label = label.into();
        let idx = self.eq_rows.len();
        self.register_row(&label, RowRef::Eq(idx));
        self.eq_rows.push(Row { label, coeffs, rhs });
        idx
    }

    pub fn add_ineq(&mut self, label: impl Into<String>, coeffs: Vec<(usize, f64)>, rhs: f64) -> usize {
        let label = label.into();
        let idx = self.ineq_rows.len();
        self.register_row(&label, RowRef::Ineq(idx));
        self.ineq_rows.push(Row { label, coeffs, rhs });
        idx
    }

    pub fn row(&self, label: &str) -> Result<RowRef> {
        self.row_index
            .get(label)
            .copied()
            .ok_or_else(|| Error::MissingRow(label.to_string()))
    }

    pub fn has_row(&self, label: &str) -> bool {
        self.row_index.contains_key(label)
    }

    /// Rebuilds the lookup tables, needed after deserialization.
    pub fn reindex(&mut self) {
        self.name_index = self.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        self.row_index.clear();
        for (i, r) in self.eq_rows.iter().enumerate() {
            self.row_index.insert(r.label.clone(), RowRef::Eq(i));
        }
        for (i, r) in self.ineq_rows.iter().enumerate() {
            self.row_index.insert(r.label.clone(), RowRef::Ineq(i));
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (j, &c) in self.linear.iter().enumerate() {
            v += c * x[j];
        }
        for &(i, j, q) in &self.quad {
            if i == j {
                v += 0.5 * q * x[i] * x[i];
            } else {
                v += q * x[i] * x[j];
            }
        }
        v
    }

    /// `Qx + q`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.linear.clone();
        for &(i, j, q) in &self.quad {
            g[i] += q * x[j];
            if i != j {
                g[j] += q * x[i];
            }
        }
        g
    }

    /// `Q v` without the linear term.
    pub fn q_times(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for &(i, j, q) in &self.quad {
            out[i] += q * v[j];
            if i != j {
                out[j] += q * v[i];
            }
        }
        out
    }

    /// Adds `commitment-fix` equality rows pinning every binary at `u_star`
    /// and clears the binary set. Row labels replace the leading `u` of the
    /// variable name, so `u[G1,3]` is fixed by `commitment-fix[G1,3]`.
    pub fn fix_commitment(&self, u_star: &[f64]) -> Result<QuadraticProgram> {
        if u_star.len() != self.binaries.len() {
            return Err(Error::Dimension(format!(
                "commitment vector has {} entries, program has {} binaries",
                u_star.len(),
                self.binaries.len()
            )));
        }
        let mut out = self.clone();
        out.binaries.clear();
        for (&j, &v) in self.binaries.iter().zip(u_star) {
            let name = &self.names[j];
            let suffix = name.strip_prefix('u').unwrap_or(name);
            out.add_eq(format!("commitment-fix{suffix}"), vec![(j, 1.0)], v);
        }
        Ok(out)
    }

    /// Plain-text listing: objective terms, then one line per row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variables {}", self.names.len());
        for (j, n) in self.names.iter().enumerate() {
            let kind = if self.binaries.binary_search(&j).is_ok() { "binary" } else { "continuous" };
            let _ = writeln!(s, "  x{j} {n} {kind}");
        }
        let _ = writeln!(s, "objective constant {:e}", self.constant);
        for (j, &c) in self.linear.iter().enumerate() {
            if c != 0.0 {
                let _ = writeln!(s, "  linear x{j} {c:e}");
            }
        }
        for &(i, j, q) in &self.quad {
            let _ = writeln!(s, "  quad x{i} x{j} {q:e}");
        }
        for (kind, rows) in [("eq", &self.eq_rows), ("le", &self.ineq_rows)] {
            for r in rows {
                let _ = write!(s, "{kind} {}:", r.label);
                for &(j, a) in &r.coeffs {
                    let _ = write!(s, " {a:+e}*x{j}");
                }
                let _ = writeln!(s, " {} {:e}", if kind == "eq" { "=" } else { "<=" }, r.rhs);
            }
        }
        s
    }
}

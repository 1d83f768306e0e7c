//! Convex quadratic programs with a diagonal Hessian, box bounds and sparse
//! linear rows, solved by a Mehrotra predictor-corrector primal-dual
//! interior-point method.
//!
//! ```text
//!     minimize    ½ xᵀ diag(h) x + cᵀ x
//!     subject to  a_r x  = b_r      (Eq rows)
//!                 a_r x <= b_r      (Le rows)
//!                 l <= x <= u
//! ```
//!
//! Rows may be tagged with a block id. Variables that appear in rows of one
//! block may not appear in rows of another block; untagged rows link blocks.
//! The normal equations then have bordered block-diagonal form and are solved
//! by dense Cholesky per block plus a Schur complement on the linking rows, so
//! a week of hourly market-clearing blocks coupled by a handful of weekly
//! energy budgets costs little more than the hours on their own.
//!
//! Row duals `y` follow `L = f - yᵀ(Ax - b)`, i.e. `y_r = ∂f*/∂b_r`. For an
//! `Le` row this makes `y_r <= 0`.
//!
//! Everything runs sequentially in a fixed order, so results are bitwise
//! reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {var} appears in blocks {first} and {second}")]
    Structure {
        var: usize,
        first: usize,
        second: usize,
    },
    #[error("variable {0} has empty bounds")]
    EmptyBounds(usize),
    #[error("variable {0} is free and has no curvature")]
    FreeLinear(usize),
    #[error("row {0} has no free variables and is violated by {1}")]
    InconsistentRow(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub kind: RowKind,
    pub block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadraticProgram {
    pub hess_diag: Vec<f64>,
    pub linear: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl QuadraticProgram {
    pub fn with_vars(n: usize) -> Self {
        QuadraticProgram {
            hess_diag: vec![0.0; n],
            linear: vec![0.0; n],
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, hess: f64, linear: f64, lower: f64, upper: f64) -> usize {
        self.hess_diag.push(hess);
        self.linear.push(linear);
        self.lower.push(lower);
        self.upper.push(upper);
        self.linear.len() - 1
    }

    pub fn add_row(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        kind: RowKind,
        rhs: f64,
        block: Option<usize>,
    ) -> usize {
        self.rows.push(Row {
            coeffs,
            rhs,
            kind,
            block,
        });
        self.rows.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| 0.5 * self.hess_diag[i] * xi * xi + self.linear[i] * xi)
            .sum()
    }

    fn check(&self) -> Result<(), QpError> {
        let n = self.n_vars();
        if self.hess_diag.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(QpError::Dimension(
                "per-variable vectors differ in length".into(),
            ));
        }
        for r in &self.rows {
            if let Some(&(j, _)) = r.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(QpError::Dimension(format!(
                    "row references variable {j} of {n}"
                )));
            }
        }
        for i in 0..n {
            if self.lower[i] > self.upper[i] || self.lower[i].is_nan() || self.upper[i].is_nan() {
                return Err(QpError::EmptyBounds(i));
            }
            if self.hess_diag[i] < 0.0 || self.hess_diag[i].is_nan() {
                return Err(QpError::Dimension(format!(
                    "negative curvature on variable {i}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpSettings {
    /// Relative tolerance on the primal and dual residuals.
    pub tolerance: f64,
    /// Tolerance on `min(slack, multiplier)` per bound, in scaled units.
    /// Degenerate pairs only shrink like the square root of the barrier
    /// parameter, so this is looser than `tolerance`.
    pub complementarity_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            tolerance: 1e-10,
            complementarity_tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

impl QpSettings {
    /// Largest ratio of a measure to its tolerance; 1 or below is converged.
    fn excess(&self, rp: f64, rd: f64, gap: f64) -> f64 {
        (rp.max(rd) / self.tolerance).max(gap / self.complementarity_tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    MaxIterations,
    Infeasible,
    Unbounded,
    /// The iteration produced non-finite values.
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// One dual per row, see module docs for the sign convention.
    pub y: Vec<f64>,
    /// Multipliers of `x >= l` and `x <= u` (zero for infinite bounds).
    pub z_lower: Vec<f64>,
    pub z_upper: Vec<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub complementarity: f64,
}

impl QpSolution {
    /// Largest of the three relative optimality measures.
    pub fn kkt_residual(&self) -> f64 {
        self.primal_residual
            .max(self.dual_residual)
            .max(self.complementarity)
    }
}

/// Dense symmetric positive definite factorization, lower triangle, row-major.
#[derive(Debug, Clone)]
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor `a` (n x n, row-major). Tiny or negative pivots are lifted to a
    /// floor relative to the largest diagonal entry.
    fn factor(mut a: Vec<f64>, n: usize) -> Self {
        let max_diag = (0..n)
            .map(|i| a[i * n + i])
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let floor = max_diag * 1e-14;
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if d < floor {
                d = floor;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        Cholesky { n, l: a }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Where a row lives inside the bordered block-diagonal normal matrix.
#[derive(Debug, Clone, Copy)]
enum Slot {
    Block { block: usize, local: usize },
    Link(usize),
}

/// Preprocessed, scaled problem in standard form (all rows equalities).
struct Reduced {
    n: usize,
    h: Vec<f64>,
    c: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    /// Column-wise constraint matrix: per variable, (row, coeff).
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    slots: Vec<Slot>,
    block_sizes: Vec<usize>,
    n_link: usize,
}

impl Reduced {
    fn n_rows(&self) -> usize {
        self.b.len()
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows()];
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, a) in col {
                out[r] += a * x[j];
            }
        }
        out
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(r, a)| a * y[r]).sum())
            .collect()
    }
}

/// Normal-equation system `A D⁻¹ Aᵀ` in bordered block-diagonal form.
struct NormalSystem {
    blocks: Vec<Cholesky>,
    /// Per block: `B⁻¹ Cᵀ`, n_b x n_link, row-major.
    w: Vec<Vec<f64>>,
    /// Per block: `C`, n_link x n_b, row-major.
    c: Vec<Vec<f64>>,
    schur: Option<Cholesky>,
}

impl NormalSystem {
    fn assemble(red: &Reduced, dinv: &[f64]) -> Self {
        let k = red.n_link;
        let mut bmats: Vec<Vec<f64>> = red.block_sizes.iter().map(|&s| vec![0.0; s * s]).collect();
        let mut cmats: Vec<Vec<f64>> = red.block_sizes.iter().map(|&s| vec![0.0; k * s]).collect();
        let mut e = vec![0.0; k * k];
        for (j, col) in red.cols.iter().enumerate() {
            let di = dinv[j];
            for &(r1, a1) in col {
                for &(r2, a2) in col {
                    let v = a1 * a2 * di;
                    match (red.slots[r1], red.slots[r2]) {
                        (
                            Slot::Block {
                                block: b1,
                                local: i1,
                            },
                            Slot::Block { local: i2, .. },
                        ) => {
                            let s = red.block_sizes[b1];
                            bmats[b1][i1 * s + i2] += v;
                        }
                        (Slot::Link(i1), Slot::Block { block, local }) => {
                            let s = red.block_sizes[block];
                            cmats[block][i1 * s + local] += v;
                        }
                        (Slot::Link(i1), Slot::Link(i2)) => e[i1 * k + i2] += v,
                        (Slot::Block { .. }, Slot::Link(_)) => {}
                    }
                }
            }
        }
        let blocks: Vec<Cholesky> = bmats
            .into_iter()
            .zip(&red.block_sizes)
            .map(|(m, &s)| Cholesky::factor(m, s))
            .collect();
        let mut w = Vec::with_capacity(blocks.len());
        if k > 0 {
            for (bi, chol) in blocks.iter().enumerate() {
                let s = red.block_sizes[bi];
                let cm = &cmats[bi];
                let mut wb = vec![0.0; s * k];
                let mut col = vec![0.0; s];
                for li in 0..k {
                    col.copy_from_slice(&cm[li * s..(li + 1) * s]);
                    chol.solve_in_place(&mut col);
                    for i in 0..s {
                        wb[i * k + li] = col[i];
                    }
                }
                for l1 in 0..k {
                    for l2 in 0..k {
                        let mut acc = 0.0;
                        for i in 0..s {
                            acc += cm[l1 * s + i] * wb[i * k + l2];
                        }
                        e[l1 * k + l2] -= acc;
                    }
                }
                w.push(wb);
            }
        }
        let schur = (k > 0).then(|| Cholesky::factor(e, k));
        NormalSystem {
            blocks,
            w,
            c: cmats,
            schur,
        }
    }

    /// Solve in place; `rhs` is indexed by global row.
    fn solve(&self, red: &Reduced, rhs: &[f64]) -> Vec<f64> {
        let k = red.n_link;
        let mut local: Vec<Vec<f64>> = red.block_sizes.iter().map(|&s| vec![0.0; s]).collect();
        let mut link = vec![0.0; k];
        for (r, slot) in red.slots.iter().enumerate() {
            match *slot {
                Slot::Block { block, local: i } => local[block][i] = rhs[r],
                Slot::Link(i) => link[i] = rhs[r],
            }
        }
        for (bi, chol) in self.blocks.iter().enumerate() {
            chol.solve_in_place(&mut local[bi]);
        }
        if let Some(schur) = &self.schur {
            // r_L - Σ C_b B_b⁻¹ r_b
            for (bi, yb) in local.iter().enumerate() {
                let s = red.block_sizes[bi];
                let cm = &self.c[bi];
                for (li, l) in link.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for i in 0..s {
                        acc += cm[li * s + i] * yb[i];
                    }
                    *l -= acc;
                }
            }
            schur.solve_in_place(&mut link);
            // y_b = B⁻¹ r_b - W_b y_L
            for (bi, yb) in local.iter_mut().enumerate() {
                let wb = &self.w[bi];
                for (i, v) in yb.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (li, &yl) in link.iter().enumerate() {
                        acc += wb[i * k + li] * yl;
                    }
                    *v -= acc;
                }
            }
        }
        let mut out = vec![0.0; rhs.len()];
        for (r, slot) in red.slots.iter().enumerate() {
            out[r] = match *slot {
                Slot::Block { block, local: i } => local[block][i],
                Slot::Link(i) => link[i],
            };
        }
        out
    }
}

struct Prepared {
    red: Reduced,
    /// Index in the reduced problem per original variable, `None` if fixed.
    var_map: Vec<Option<usize>>,
    /// Index in the reduced problem per original row, `None` if dropped.
    row_map: Vec<Option<usize>>,
    fixed_value: Vec<f64>,
    /// Equality rows with a single free variable, `(row, var, coeff)`, in
    /// the order they were fixed.
    singletons: Vec<(usize, usize, f64)>,
    qscale: f64,
    cscale: f64,
}

fn prepare(qp: &QuadraticProgram) -> Result<Prepared, QpError> {
    qp.check()?;
    let n0 = qp.n_vars();
    // Boxes narrower than this are treated as points.
    let pinned = |i: usize| {
        let (l, u) = (qp.lower[i], qp.upper[i]);
        u.is_finite() && l.is_finite() && u - l <= 1e-12 * l.abs().max(u.abs()).max(1.0)
    };
    let mut fixed: Vec<bool> = (0..n0).map(pinned).collect();
    let mut fixed_value: Vec<f64> = (0..n0)
        .map(|i| {
            if fixed[i] {
                0.5 * (qp.lower[i] + qp.upper[i])
            } else {
                0.0
            }
        })
        .collect();

    // An equality row with one free variable pins that variable. Left in,
    // it can leave the row's dual unbounded (a zone cut off from all supply).
    let mut singletons = Vec::new();
    let mut removed = vec![false; qp.n_rows()];
    loop {
        let mut changed = false;
        for (r, row) in qp.rows.iter().enumerate() {
            if removed[r] || row.kind != RowKind::Eq {
                continue;
            }
            let mut rhs = row.rhs;
            let mut free = None;
            let mut count = 0;
            for &(j, a) in &row.coeffs {
                if a == 0.0 {
                    continue;
                }
                if fixed[j] {
                    rhs -= a * fixed_value[j];
                } else if free.is_none_or(|(k, _)| k != j) {
                    count += 1;
                    free = Some((j, a));
                }
            }
            let Some((j, a)) = free.filter(|_| count == 1) else {
                continue;
            };
            let v = rhs / a;
            let tol = 1e-9 * (1.0 + v.abs());
            if v < qp.lower[j] - tol || v > qp.upper[j] + tol {
                let gap = (qp.lower[j] - v).max(v - qp.upper[j]);
                return Err(QpError::InconsistentRow(r, gap));
            }
            fixed[j] = true;
            fixed_value[j] = v.clamp(qp.lower[j], qp.upper[j]);
            removed[r] = true;
            singletons.push((r, j, a));
            changed = true;
        }
        if !changed {
            break;
        }
    }

    let mut var_map = vec![None; n0];
    let mut n = 0;
    for i in 0..n0 {
        if !fixed[i] {
            if qp.hess_diag[i] == 0.0 && qp.lower[i].is_infinite() && qp.upper[i].is_infinite() {
                return Err(QpError::FreeLinear(i));
            }
            var_map[i] = Some(n);
            n += 1;
        }
    }

    // Keep rows that still have a free variable; Le rows get a slack.
    let mut row_map = vec![None; qp.n_rows()];
    let mut kept: Vec<(Vec<(usize, f64)>, f64, RowKind, Option<usize>)> = Vec::new();
    for (r, row) in qp.rows.iter().enumerate() {
        if removed[r] {
            continue;
        }
        let mut rhs = row.rhs;
        let mut coeffs = Vec::new();
        for &(j, a) in &row.coeffs {
            if a == 0.0 {
                continue;
            }
            match var_map[j] {
                Some(k) => coeffs.push((k, a)),
                None => rhs -= a * fixed_value[j],
            }
        }
        if coeffs.is_empty() {
            let violation = match row.kind {
                RowKind::Eq => rhs.abs(),
                RowKind::Le => (-rhs).max(0.0),
            };
            let scale = 1.0 + row.rhs.abs();
            if violation > 1e-9 * scale {
                return Err(QpError::InconsistentRow(r, violation));
            }
            if row.kind == RowKind::Eq {
                continue;
            }
        }
        row_map[r] = Some(kept.len());
        kept.push((coeffs, rhs, row.kind, row.block));
    }

    let mut h: Vec<f64> = (0..n0)
        .filter(|&i| !fixed[i])
        .map(|i| qp.hess_diag[i])
        .collect();
    let mut c: Vec<f64> = (0..n0)
        .filter(|&i| !fixed[i])
        .map(|i| qp.linear[i])
        .collect();
    let mut lo: Vec<f64> = (0..n0)
        .filter(|&i| !fixed[i])
        .map(|i| qp.lower[i])
        .collect();
    let mut up: Vec<f64> = (0..n0)
        .filter(|&i| !fixed[i])
        .map(|i| qp.upper[i])
        .collect();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = Vec::with_capacity(kept.len());
    for (r, (coeffs, rhs, kind, _)) in kept.iter().enumerate() {
        for &(k, a) in coeffs {
            cols[k].push((r, a));
        }
        if *kind == RowKind::Le {
            h.push(0.0);
            c.push(0.0);
            lo.push(0.0);
            up.push(f64::INFINITY);
            cols.push(vec![(r, 1.0)]);
        }
        b.push(*rhs);
    }
    let n = h.len();

    // Block layout.
    let mut block_ids: Vec<usize> = kept.iter().filter_map(|k| k.3).collect();
    block_ids.sort_unstable();
    block_ids.dedup();
    let mut block_sizes = vec![0usize; block_ids.len()];
    let mut n_link = 0;
    let mut slots = Vec::with_capacity(kept.len());
    for k in &kept {
        match k.3 {
            Some(id) => {
                let bi = block_ids.binary_search(&id).unwrap();
                slots.push(Slot::Block {
                    block: bi,
                    local: block_sizes[bi],
                });
                block_sizes[bi] += 1;
            }
            None => {
                slots.push(Slot::Link(n_link));
                n_link += 1;
            }
        }
    }
    for (j, col) in cols.iter().enumerate() {
        let mut seen: Option<usize> = None;
        for &(r, _) in col {
            if let Slot::Block { block, .. } = slots[r] {
                match seen {
                    None => seen = Some(block),
                    Some(s) if s != block => {
                        let orig = var_map.iter().position(|&v| v == Some(j)).unwrap_or(j);
                        return Err(QpError::Structure {
                            var: orig,
                            first: block_ids[s],
                            second: block_ids[block],
                        });
                    }
                    _ => {}
                }
            }
        }
    }

    // Scaling: quantities by `qscale`, objective by `qscale * cscale`.
    let mut qscale: f64 = 1.0;
    for (v, k) in b.iter().zip(&kept) {
        if k.2 == RowKind::Eq {
            qscale = qscale.max(v.abs());
        }
    }
    for i in 0..n {
        for v in [lo[i], up[i]] {
            if v.is_finite() && v.abs() < 1e8 {
                qscale = qscale.max(v.abs());
            }
        }
    }
    let mut cscale: f64 = 1.0;
    for i in 0..n {
        cscale = cscale.max(c[i].abs()).max(h[i] * qscale);
    }
    for i in 0..n {
        h[i] *= qscale / cscale;
        c[i] /= cscale;
        lo[i] /= qscale;
        up[i] /= qscale;
    }
    for v in &mut b {
        *v /= qscale;
    }

    Ok(Prepared {
        red: Reduced {
            n,
            h,
            c,
            lo,
            up,
            cols,
            b,
            slots,
            block_sizes,
            n_link,
        },
        var_map,
        row_map,
        fixed_value,
        singletons,
        qscale,
        cscale,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solve `qp`. Structural problems are errors; non-convergence is reported
/// through [`QpSolution::status`] together with the last iterate.
const PRIMAL_REGULARIZATION: f64 = 1e-8;

pub fn solve(qp: &QuadraticProgram, settings: &QpSettings) -> Result<QpSolution, QpError> {
    let prep = prepare(qp)?;
    let red = &prep.red;
    let n = red.n;
    let m = red.n_rows();
    let has_lo: Vec<bool> = red.lo.iter().map(|v| v.is_finite()).collect();
    let has_up: Vec<bool> = red.up.iter().map(|v| v.is_finite()).collect();
    let n_comp = has_lo.iter().filter(|&&b| b).count() + has_up.iter().filter(|&&b| b).count();

    // Starting point: strictly inside the box, unit multipliers.
    let mut x: Vec<f64> = (0..n)
        .map(|i| match (has_lo[i], has_up[i]) {
            (true, true) => red.lo[i] + ((red.up[i] - red.lo[i]) * 0.5).min(1.0),
            (true, false) => red.lo[i] + 1.0,
            (false, true) => red.up[i] - 1.0,
            (false, false) => 0.0,
        })
        .collect();
    let mut y = vec![0.0; m];
    let mut zl: Vec<f64> = has_lo.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut zu: Vec<f64> = has_up.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();

    let b_norm = inf_norm(&red.b);
    let c_norm = inf_norm(&red.c);
    let mut status = QpStatus::MaxIterations;
    let mut iterations = 0;
    let (mut rp_rel, mut rd_rel, mut gap_rel);
    // Best iterate so far, by its excess over the tolerances.
    let mut best: Option<(f64, [f64; 3], Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = None;

    loop {
        // Residuals.
        let ax = red.ax(&x);
        let rp: Vec<f64> = (0..m).map(|r| red.b[r] - ax[r]).collect();
        let aty = red.aty(&y);
        let rd: Vec<f64> = (0..n)
            .map(|i| red.h[i] * x[i] + red.c[i] - aty[i] - zl[i] + zu[i])
            .collect();
        let sl: Vec<f64> = (0..n)
            .map(|i| if has_lo[i] { x[i] - red.lo[i] } else { 1.0 })
            .collect();
        let su: Vec<f64> = (0..n)
            .map(|i| if has_up[i] { red.up[i] - x[i] } else { 1.0 })
            .collect();
        let mut comp = 0.0;
        let mut comp_max: f64 = 0.0;
        for i in 0..n {
            if has_lo[i] {
                comp += sl[i] * zl[i];
                comp_max = comp_max.max(sl[i].min(zl[i]));
            }
            if has_up[i] {
                comp += su[i] * zu[i];
                comp_max = comp_max.max(su[i].min(zu[i]));
            }
        }
        if rp.iter().chain(&rd).any(|v| !v.is_finite()) {
            status = QpStatus::Numerical;
            rp_rel = f64::NAN;
            rd_rel = f64::NAN;
            gap_rel = f64::NAN;
            break;
        }
        rp_rel = inf_norm(&rp) / (1.0 + b_norm);
        rd_rel = inf_norm(&rd) / (1.0 + c_norm);
        // Distance from complementarity per pair, in scaled units where
        // prices and quantities are O(1).
        gap_rel = comp_max;
        let measure = settings.excess(rp_rel, rd_rel, gap_rel);
        if measure <= 1.0 {
            status = QpStatus::Optimal;
            best = None;
            break;
        }
        if best.as_ref().is_none_or(|b| measure < b.0) {
            best = Some((
                measure,
                [rp_rel, rd_rel, gap_rel],
                x.clone(),
                y.clone(),
                zl.clone(),
                zu.clone(),
            ));
        }
        if iterations >= settings.max_iterations {
            break;
        }
        let big = 1e14;
        if inf_norm(&x) > big {
            status = QpStatus::Unbounded;
            break;
        }
        if inf_norm(&y) > big || inf_norm(&zl) > big || inf_norm(&zu) > big {
            status = QpStatus::Infeasible;
            break;
        }
        iterations += 1;
        let mu = if n_comp > 0 {
            comp / n_comp as f64
        } else {
            0.0
        };

        // D = H + Σ + ρ. The primal regularization ρ bounds D⁻¹ so the Schur
        // complement of the linking rows keeps its precision near the end.
        let dinv: Vec<f64> = (0..n)
            .map(|i| {
                let mut d = red.h[i] + PRIMAL_REGULARIZATION;
                if has_lo[i] {
                    d += zl[i] / sl[i];
                }
                if has_up[i] {
                    d += zu[i] / su[i];
                }
                1.0 / d.max(1e-300)
            })
            .collect();
        let normal = NormalSystem::assemble(red, &dinv);

        // Solve the Newton system for complementarity targets rcl, rcu.
        let direction = |rcl: &[f64], rcu: &[f64]| {
            let g: Vec<f64> = (0..n)
                .map(|i| {
                    let mut v = -rd[i];
                    if has_lo[i] {
                        v += rcl[i] / sl[i];
                    }
                    if has_up[i] {
                        v -= rcu[i] / su[i];
                    }
                    v
                })
                .collect();
            let dg: Vec<f64> = (0..n).map(|i| dinv[i] * g[i]).collect();
            let adg = red.ax(&dg);
            let rhs: Vec<f64> = (0..m).map(|r| rp[r] - adg[r]).collect();
            let mut dy = normal.solve(red, &rhs);
            // Refinement against the unfactored operator A D Aᵀ.
            for _ in 0..2 {
                let at = red.aty(&dy);
                let scaled: Vec<f64> = (0..n).map(|i| dinv[i] * at[i]).collect();
                let mdy = red.ax(&scaled);
                let res: Vec<f64> = (0..m).map(|r| rhs[r] - mdy[r]).collect();
                if inf_norm(&res) <= 1e-15 * (1.0 + inf_norm(&rhs)) {
                    break;
                }
                let corr = normal.solve(red, &res);
                for r in 0..m {
                    dy[r] += corr[r];
                }
            }
            let atdy = red.aty(&dy);
            let dx: Vec<f64> = (0..n).map(|i| dinv[i] * (g[i] + atdy[i])).collect();
            let dzl: Vec<f64> = (0..n)
                .map(|i| {
                    if has_lo[i] {
                        (rcl[i] - zl[i] * dx[i]) / sl[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            let dzu: Vec<f64> = (0..n)
                .map(|i| {
                    if has_up[i] {
                        (rcu[i] + zu[i] * dx[i]) / su[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            (dx, dy, dzl, dzu)
        };
        let max_step = |dx: &[f64], dzl: &[f64], dzu: &[f64]| {
            let mut a: f64 = 1.0;
            for i in 0..n {
                if has_lo[i] {
                    if dx[i] < 0.0 {
                        a = a.min(-sl[i] / dx[i]);
                    }
                    if dzl[i] < 0.0 {
                        a = a.min(-zl[i] / dzl[i]);
                    }
                }
                if has_up[i] {
                    if dx[i] > 0.0 {
                        a = a.min(su[i] / dx[i]);
                    }
                    if dzu[i] < 0.0 {
                        a = a.min(-zu[i] / dzu[i]);
                    }
                }
            }
            a
        };

        // Predictor.
        let rcl0: Vec<f64> = (0..n)
            .map(|i| if has_lo[i] { -sl[i] * zl[i] } else { 0.0 })
            .collect();
        let rcu0: Vec<f64> = (0..n)
            .map(|i| if has_up[i] { -su[i] * zu[i] } else { 0.0 })
            .collect();
        let (dxa, _, dzla, dzua) = direction(&rcl0, &rcu0);
        let alpha_aff = max_step(&dxa, &dzla, &dzua);
        let mut comp_aff = 0.0;
        for i in 0..n {
            if has_lo[i] {
                comp_aff += (sl[i] + alpha_aff * dxa[i]) * (zl[i] + alpha_aff * dzla[i]);
            }
            if has_up[i] {
                comp_aff += (su[i] - alpha_aff * dxa[i]) * (zu[i] + alpha_aff * dzua[i]);
            }
        }
        let sigma = if n_comp > 0 && mu > 0.0 {
            let mu_aff = comp_aff / n_comp as f64;
            (mu_aff / mu).powi(3).clamp(0.0, 1.0)
        } else {
            0.0
        };

        // Corrector.
        let rcl: Vec<f64> = (0..n)
            .map(|i| {
                if has_lo[i] {
                    sigma * mu - sl[i] * zl[i] - dxa[i] * dzla[i]
                } else {
                    0.0
                }
            })
            .collect();
        let rcu: Vec<f64> = (0..n)
            .map(|i| {
                if has_up[i] {
                    sigma * mu - su[i] * zu[i] + dxa[i] * dzua[i]
                } else {
                    0.0
                }
            })
            .collect();
        let (dx, dy, dzl, dzu) = direction(&rcl, &rcu);
        let alpha = (0.995 * max_step(&dx, &dzl, &dzu)).min(1.0);
        for i in 0..n {
            x[i] += alpha * dx[i];
            zl[i] += alpha * dzl[i];
            zu[i] += alpha * dzu[i];
        }
        for r in 0..m {
            y[r] += alpha * dy[r];
        }
    }

    // Late-stage breakdown close to the target: fall back to the best iterate.
    if let Some((measure, m, bx, by, bzl, bzu)) = best {
        if status != QpStatus::Optimal {
            x = bx;
            y = by;
            zl = bzl;
            zu = bzu;
            [rp_rel, rd_rel, gap_rel] = m;
            if measure <= 100.0 {
                status = QpStatus::Optimal;
            }
        }
    }

    // Undo scaling and reinsert fixed variables / dropped rows.
    let n0 = qp.n_vars();
    let mut x_out = prep.fixed_value.clone();
    let mut zl_out = vec![0.0; n0];
    let mut zu_out = vec![0.0; n0];
    for i in 0..n0 {
        if let Some(k) = prep.var_map[i] {
            x_out[i] = x[k] * prep.qscale;
            zl_out[i] = zl[k] * prep.cscale;
            zu_out[i] = zu[k] * prep.cscale;
        }
    }
    let mut y_out: Vec<f64> = prep
        .row_map
        .iter()
        .map(|r| r.map_or(0.0, |k| y[k] * prep.cscale))
        .collect();
    // Duals of pinned rows from stationarity of their variable, taking the
    // bound multipliers as zero.
    for &(r, j, a) in prep.singletons.iter().rev() {
        let mut g = qp.hess_diag[j] * x_out[j] + qp.linear[j];
        for (i, row) in qp.rows.iter().enumerate() {
            if i == r {
                continue;
            }
            for &(k, b) in &row.coeffs {
                if k == j {
                    g -= b * y_out[i];
                }
            }
        }
        y_out[r] = g / a;
    }
    Ok(QpSolution {
        objective: qp.objective(&x_out),
        x: x_out,
        y: y_out,
        z_lower: zl_out,
        z_upper: zu_out,
        status,
        iterations,
        primal_residual: rp_rel,
        dual_residual: rd_rel,
        complementarity: gap_rel,
    })
}

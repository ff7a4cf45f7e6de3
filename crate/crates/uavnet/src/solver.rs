//! Bounded-variable linear programming by revised simplex.
//!
//! The routing relaxations this crate solves are sparse (a few nonzeros per
//! column) with every variable boxed, so the solver is a revised simplex
//! over a sparse column store:
//!
//! * rows are canonicalized to equalities by adding one slack each
//!   (greater-or-equal rows are negated first);
//! * the basis matrix is LU-factorized column by column with partial
//!   pivoting, and pivots between refactorizations are absorbed into
//!   product-form eta vectors;
//! * pricing is Dantzig (largest reduced-cost violation) and falls back to
//!   Bland's smallest-index rule after a run of degenerate steps, which
//!   guarantees termination; all ties break to the lowest index so a given
//!   problem always takes the same path;
//! * if the all-slack basis is infeasible, a phase-1 run over artificial
//!   variables finds a feasible basis or an infeasibility certificate.
//!
//! The solution reports the dual gap computed from the final multipliers;
//! exact optima close it to rounding error, and callers treat a large gap
//! as a solver failure rather than trusting the answer.

use crate::error::{Error, Result};

/// Row comparison sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// A linear program over boxed variables.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
/// `entries` holds the constraint matrix as (row, column, coefficient)
/// triplets; duplicate coordinates are summed.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub maximize: bool,
    pub obj: Vec<f64>,
    /// Constant added to the reported objective value.
    pub obj_constant: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Values of the structural variables.
    pub x: Vec<f64>,
    /// Objective in the problem's own sense, including `obj_constant`.
    pub objective: f64,
    /// |primal - dual| objective agreement at the final basis.
    pub dual_gap: f64,
    pub iterations: usize,
}

/// Compressed sparse columns of the canonicalized constraint matrix.
struct Csc {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csc {
    fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VStat {
    Basic,
    Lower,
    Upper,
}

/// LU factors of a basis, stored in pivot order.
struct LuFactors {
    /// Original row chosen as pivot at each elimination step.
    pivot_row: Vec<usize>,
    pos_of_row: Vec<usize>,
    /// Column multipliers below the pivot, by original row index.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Upper-triangular entries above the diagonal, by pivot position.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
}

/// Product-form update from one pivot: basis position `pos` was replaced
/// and its transformed entering column is stored sparsely.
struct Eta {
    pos: usize,
    diag: f64,
    entries: Vec<(usize, f64)>,
}

const REFACTOR_EVERY: usize = 64;
const PIVOT_TOL: f64 = 1e-11;
const REDUCED_COST_TOL: f64 = 1e-9;
const DEGENERATE_RUN_FOR_BLAND: usize = 60;

struct Simplex<'a> {
    m: usize,
    /// structurals + slacks + artificials
    n_total: usize,
    n_struct: usize,
    cols: &'a Csc,
    /// Sign carried by each artificial column (unit column `sigma * e_i`).
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    stat: Vec<VStat>,
    xval: Vec<f64>,
    basis: Vec<usize>,
    lu: LuFactors,
    etas: Vec<Eta>,
    // Scratch buffers, reused across iterations.
    work: Vec<f64>,
    work2: Vec<f64>,
    iterations: usize,
    iteration_limit: usize,
}

/// Duals of the final basis, by original row.
type Duals = Vec<f64>;

impl<'a> Simplex<'a> {
    /// Column `j` of the canonical matrix: structural, slack, or artificial.
    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.n_struct {
            out.extend(self.cols.col(j));
        } else if j < self.n_struct + self.m {
            out.push((j - self.n_struct, 1.0));
        } else {
            let i = j - self.n_struct - self.m;
            out.push((i, self.art_sign[i]));
        }
    }

    fn factorize(&mut self) -> Result<()> {
        let m = self.m;
        let mut lu = LuFactors {
            pivot_row: Vec::with_capacity(m),
            pos_of_row: vec![usize::MAX; m],
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
        };
        let mut z = vec![0.0f64; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut colbuf: Vec<(usize, f64)> = Vec::new();
        for step in 0..m {
            // Scatter basis column and eliminate with the computed L part.
            let var = self.basis[step];
            self.column(var, &mut colbuf);
            for &(r, v) in &colbuf {
                if z[r] == 0.0 {
                    touched.push(r);
                }
                z[r] += v;
            }
            for k in 0..step {
                let pr = lu.pivot_row[k];
                let t = z[pr];
                if t == 0.0 {
                    continue;
                }
                for &(r, mult) in &lu.l_cols[k] {
                    if z[r] == 0.0 {
                        touched.push(r);
                    }
                    z[r] -= mult * t;
                }
            }
            // Partial pivoting over the not-yet-pivoted rows.
            let mut piv_row = usize::MAX;
            let mut piv_abs = 0.0f64;
            for &r in &touched {
                if lu.pos_of_row[r] != usize::MAX {
                    continue;
                }
                let a = z[r].abs();
                if a > piv_abs || (a == piv_abs && a > 0.0 && r < piv_row) {
                    piv_abs = a;
                    piv_row = r;
                }
            }
            if piv_row == usize::MAX || piv_abs <= PIVOT_TOL {
                return Err(Error::Internal(format!(
                    "singular basis at elimination step {step}"
                )));
            }
            let piv = z[piv_row];
            let mut lcol = Vec::new();
            let mut ucol = Vec::new();
            for &r in &touched {
                let v = z[r];
                z[r] = 0.0;
                if v == 0.0 {
                    continue;
                }
                let pos = lu.pos_of_row[r];
                if r == piv_row {
                    continue;
                }
                if pos == usize::MAX {
                    lcol.push((r, v / piv));
                } else {
                    ucol.push((pos, v));
                }
            }
            touched.clear();
            ucol.sort_unstable_by_key(|e| e.0);
            lu.pivot_row.push(piv_row);
            lu.pos_of_row[piv_row] = step;
            lu.l_cols.push(lcol);
            lu.u_cols.push(ucol);
            lu.u_diag.push(piv);
        }
        self.lu = lu;
        self.etas.clear();
        Ok(())
    }

    /// Solve B w = col, result indexed by basis position.
    fn ftran(&mut self, col: &[(usize, f64)]) -> Vec<f64> {
        let m = self.m;
        let z = &mut self.work;
        z.iter_mut().for_each(|v| *v = 0.0);
        for &(r, v) in col {
            z[r] += v;
        }
        for k in 0..m {
            let t = z[self.lu.pivot_row[k]];
            if t == 0.0 {
                continue;
            }
            for &(r, mult) in &self.lu.l_cols[k] {
                z[r] -= mult * t;
            }
        }
        let y = &mut self.work2;
        for k in 0..m {
            y[k] = z[self.lu.pivot_row[k]];
            z[self.lu.pivot_row[k]] = 0.0;
        }
        for k in (0..m).rev() {
            let xk = y[k] / self.lu.u_diag[k];
            y[k] = xk;
            if xk != 0.0 {
                for &(p, v) in &self.lu.u_cols[k] {
                    y[p] -= v * xk;
                }
            }
        }
        let mut x = y.clone();
        for eta in &self.etas {
            let t = x[eta.pos] / eta.diag;
            x[eta.pos] = t;
            if t != 0.0 {
                for &(p, v) in &eta.entries {
                    x[p] -= v * t;
                }
            }
        }
        x
    }

    /// Solve B' y = c (c indexed by basis position), result by original row.
    fn btran(&mut self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let w = &mut self.work;
        w[..m].copy_from_slice(c);
        for eta in self.etas.iter().rev() {
            let mut s = w[eta.pos];
            for &(p, v) in &eta.entries {
                s -= v * w[p];
            }
            w[eta.pos] = s / eta.diag;
        }
        for k in 0..m {
            let mut s = w[k];
            for &(p, v) in &self.lu.u_cols[k] {
                s -= v * w[p];
            }
            w[k] = s / self.lu.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut s = w[k];
            for &(r, mult) in &self.lu.l_cols[k] {
                s -= mult * w[self.lu.pos_of_row[r]];
            }
            w[k] = s;
        }
        let mut y = vec![0.0f64; m];
        for k in 0..m {
            y[self.lu.pivot_row[k]] = w[k];
        }
        y
    }

    /// Recompute all basic values exactly from the nonbasic bounds.
    fn recompute_basics(&mut self) {
        let mut resid = self.rhs.clone();
        let mut colbuf = Vec::new();
        for j in 0..self.n_total {
            if self.stat[j] == VStat::Basic || self.xval[j] == 0.0 {
                continue;
            }
            let xj = self.xval[j];
            self.column(j, &mut colbuf);
            for &(r, v) in &colbuf {
                resid[r] -= v * xj;
            }
        }
        let col: Vec<(usize, f64)> =
            resid.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(r, &v)| (r, v)).collect();
        let xb = self.ftran(&col);
        for k in 0..self.m {
            self.xval[self.basis[k]] = xb[k];
        }
    }

    fn reduced_cost(&self, j: usize, c: &[f64], y: &[f64]) -> f64 {
        let mut d = c[j];
        if j < self.n_struct {
            for (r, v) in self.cols.col(j) {
                d -= y[r] * v;
            }
        } else if j < self.n_struct + self.m {
            d -= y[j - self.n_struct];
        } else {
            let i = j - self.n_struct - self.m;
            d -= y[i] * self.art_sign[i];
        }
        d
    }

    /// Minimize c over the current basis; `c` is indexed over all columns.
    fn run(&mut self, c: &[f64]) -> Result<Duals> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut colbuf: Vec<(usize, f64)> = Vec::new();
        loop {
            self.iterations += 1;
            if self.iterations > self.iteration_limit {
                return Err(Error::IterationLimit { limit: self.iteration_limit });
            }
            let cb: Vec<f64> = self.basis.iter().map(|&v| c[v]).collect();
            let y = self.btran(&cb);

            // Pricing: Dantzig steepest reduced cost, or Bland when
            // degeneracy has stalled progress.
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n_total {
                if self.stat[j] == VStat::Basic || self.upper[j] - self.lower[j] < 1e-15 {
                    continue;
                }
                let d = self.reduced_cost(j, c, &y);
                let score = match self.stat[j] {
                    VStat::Lower if d < -REDUCED_COST_TOL => -d,
                    VStat::Upper if d > REDUCED_COST_TOL => d,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d));
                    break;
                }
                let better = match entering {
                    None => true,
                    Some((_, best)) => score > best.abs(),
                };
                if better {
                    entering = Some((j, d));
                }
            }
            let Some((q, _)) = entering else {
                return Ok(y);
            };

            self.column(q, &mut colbuf);
            let w = self.ftran(&colbuf);
            let sigma = if self.stat[q] == VStat::Lower { 1.0 } else { -1.0 };

            // Ratio test against every basic bound and the entering
            // variable's own span.
            let own_span = self.upper[q] - self.lower[q];
            let mut t_best = own_span;
            let mut leaving: Option<(usize, bool)> = None;
            for (i, &wi) in w.iter().enumerate() {
                let delta = sigma * wi;
                let v = self.basis[i];
                let (t, to_upper) = if delta > PIVOT_TOL {
                    ((self.xval[v] - self.lower[v]) / delta, false)
                } else if delta < -PIVOT_TOL {
                    if self.upper[v].is_infinite() {
                        continue;
                    }
                    ((self.upper[v] - self.xval[v]) / -delta, true)
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let take = match leaving {
                    _ if t < t_best - 1e-10 => true,
                    None => t < t_best + 1e-10,
                    Some((r, _)) if t < t_best + 1e-10 => {
                        if bland {
                            // Anti-cycling: smallest leaving variable index.
                            v < self.basis[r]
                        } else {
                            // Stability: largest pivot magnitude, then
                            // lowest position.
                            let cur = w[r].abs();
                            wi.abs() > cur + 1e-30 || (wi.abs() == cur && i < r)
                        }
                    }
                    _ => false,
                };
                if take {
                    t_best = t_best.min(t);
                    leaving = Some((i, to_upper));
                }
            }
            if t_best.is_infinite() {
                return Err(Error::LpUnbounded { col: q });
            }
            let t = t_best.max(0.0);
            if t < 1e-10 {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_RUN_FOR_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            // Move.
            for (i, &wi) in w.iter().enumerate() {
                if wi != 0.0 {
                    let v = self.basis[i];
                    self.xval[v] -= t * sigma * wi;
                }
            }
            self.xval[q] += sigma * t;
            match leaving {
                None => {
                    // The entering variable flipped to its opposite bound.
                    self.stat[q] = if sigma > 0.0 { VStat::Upper } else { VStat::Lower };
                    self.xval[q] =
                        if sigma > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.xval[out] =
                        if to_upper { self.upper[out] } else { self.lower[out] };
                    self.stat[out] = if to_upper { VStat::Upper } else { VStat::Lower };
                    self.stat[q] = VStat::Basic;
                    self.basis[r] = q;
                    let diag = w[r];
                    if diag.abs() <= PIVOT_TOL {
                        return Err(Error::Internal(format!(
                            "vanishing pivot {diag:.3e} at basis position {r}"
                        )));
                    }
                    let entries: Vec<(usize, f64)> = w
                        .iter()
                        .enumerate()
                        .filter(|&(i, &v)| i != r && v != 0.0)
                        .map(|(i, &v)| (i, v))
                        .collect();
                    self.etas.push(Eta { pos: r, diag, entries });
                    if self.etas.len() >= REFACTOR_EVERY {
                        self.factorize()?;
                        self.recompute_basics();
                    }
                }
            }
        }
    }
}

impl LpProblem {
    fn validate(&self) -> Result<()> {
        let n = self.obj.len();
        let m = self.rhs.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Internal(format!(
                "bounds arrays have lengths {}/{} for {n} variables",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.senses.len() != m {
            return Err(Error::Internal(format!(
                "{} senses for {m} rows",
                self.senses.len()
            )));
        }
        for j in 0..n {
            if !self.lower[j].is_finite() {
                return Err(Error::Validation {
                    field: format!("lower[{j}]"),
                    message: "lower bounds must be finite".into(),
                });
            }
            if self.upper[j] < self.lower[j] || self.upper[j].is_nan() {
                return Err(Error::Infeasible(format!(
                    "variable {j} has empty bound interval [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        for (k, &(r, c, v)) in self.entries.iter().enumerate() {
            if r >= m || c >= n || !v.is_finite() {
                return Err(Error::Internal(format!(
                    "entry {k} = ({r}, {c}, {v}) out of shape {m} x {n}"
                )));
            }
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation {
                field: "rhs".into(),
                message: "right-hand sides must be finite".into(),
            });
        }
        Ok(())
    }

    /// Solve to optimality. Errors: [`Error::LpInfeasible`],
    /// [`Error::LpUnbounded`], [`Error::IterationLimit`].
    pub fn solve(&self) -> Result<LpSolution> {
        self.validate()?;
        let n = self.obj.len();
        let m = self.rhs.len();
        if m == 0 {
            // Bound-only problem.
            let mut x = vec![0.0; n];
            for j in 0..n {
                let c = if self.maximize { -self.obj[j] } else { self.obj[j] };
                x[j] = if c >= 0.0 { self.lower[j] } else { self.upper[j] };
                if x[j].is_infinite() {
                    return Err(Error::LpUnbounded { col: j });
                }
            }
            let objective =
                x.iter().zip(&self.obj).map(|(a, b)| a * b).sum::<f64>() + self.obj_constant;
            return Ok(LpSolution { x, objective, dual_gap: 0.0, iterations: 0 });
        }

        // Canonicalize: negate >= rows, then build CSC sorted by column.
        let mut row_sign = vec![1.0f64; m];
        let mut rhs = self.rhs.clone();
        for i in 0..m {
            if self.senses[i] == Sense::Ge {
                row_sign[i] = -1.0;
                rhs[i] = -rhs[i];
            }
        }
        let mut triplets: Vec<(usize, usize, f64)> =
            self.entries.iter().map(|&(r, c, v)| (c, r, v * row_sign[r])).collect();
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(c, r, v) in &triplets {
            match merged.last_mut() {
                Some(last) if last.0 == c && last.1 == r => last.2 += v,
                _ => merged.push((c, r, v)),
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for &(c, _, _) in &merged {
            col_ptr[c + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let cols = Csc {
            col_ptr,
            row_idx: merged.iter().map(|e| e.1).collect(),
            val: merged.iter().map(|e| e.2).collect(),
        };

        let n_total = n + 2 * m;
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for i in 0..m {
            lower.push(0.0);
            upper.push(match self.senses[i] {
                Sense::Eq => 0.0,
                _ => f64::INFINITY,
            });
        }
        // Artificials: fixed at zero unless phase 1 activates them.
        lower.extend(std::iter::repeat(0.0).take(m));
        upper.extend(std::iter::repeat(0.0).take(m));

        let mut sx = Simplex {
            m,
            n_total,
            n_struct: n,
            cols: &cols,
            art_sign: vec![1.0; m],
            lower,
            upper,
            rhs: rhs.clone(),
            stat: vec![VStat::Lower; n_total],
            xval: vec![0.0; n_total],
            basis: (0..m).map(|i| n + i).collect(),
            lu: LuFactors {
                pivot_row: vec![],
                pos_of_row: vec![],
                l_cols: vec![],
                u_cols: vec![],
                u_diag: vec![],
            },
            etas: Vec::new(),
            work: vec![0.0; m],
            work2: vec![0.0; m],
            iterations: 0,
            iteration_limit: 200 * (m + n) + 20_000,
        };
        for j in 0..n {
            sx.xval[j] = sx.lower[j];
        }

        // Slack-basis values; activate artificials on violated rows.
        let mut resid = rhs.clone();
        for j in 0..n {
            if sx.xval[j] != 0.0 {
                for (r, v) in cols.col(j) {
                    resid[r] -= v * sx.xval[j];
                }
            }
        }
        let mut phase1_cost = vec![0.0f64; n_total];
        let mut needs_phase1 = false;
        for i in 0..m {
            let s = n + i;
            let (slo, shi) = (sx.lower[s], sx.upper[s]);
            if resid[i] >= slo - 1e-9 && resid[i] <= shi + 1e-9 {
                sx.stat[s] = VStat::Basic;
                sx.xval[s] = resid[i];
                continue;
            }
            needs_phase1 = true;
            let (sval, sstat) = if resid[i] < slo {
                (slo, VStat::Lower)
            } else {
                (shi, VStat::Upper)
            };
            sx.xval[s] = sval;
            sx.stat[s] = sstat;
            let rem = resid[i] - sval;
            let art = n + m + i;
            sx.art_sign[i] = if rem >= 0.0 { 1.0 } else { -1.0 };
            sx.upper[art] = f64::INFINITY;
            sx.xval[art] = rem.abs();
            sx.stat[art] = VStat::Basic;
            sx.basis[i] = art;
            phase1_cost[art] = 1.0;
        }

        sx.factorize()?;

        if needs_phase1 {
            match sx.run(&phase1_cost) {
                Err(Error::LpUnbounded { .. }) => {
                    return Err(Error::Internal(
                        "phase 1 reported unbounded; its objective is bounded by zero".into(),
                    ))
                }
                Err(e) => return Err(e),
                Ok(_) => {}
            }
            let scale = 1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut infeas = 0.0f64;
            let mut worst_row = 0usize;
            for i in 0..m {
                let a = sx.xval[n + m + i];
                if a > infeas {
                    infeas = a;
                    worst_row = i;
                }
            }
            if infeas > 1e-7 * scale {
                return Err(Error::LpInfeasible { row: worst_row });
            }
            // Freeze artificials for phase 2.
            for i in 0..m {
                let art = n + m + i;
                sx.upper[art] = 0.0;
                if sx.stat[art] != VStat::Basic {
                    sx.xval[art] = 0.0;
                    sx.stat[art] = VStat::Lower;
                }
            }
        }

        let mut cost = vec![0.0f64; n_total];
        for j in 0..n {
            cost[j] = if self.maximize { -self.obj[j] } else { self.obj[j] };
        }
        let duals = sx.run(&cost)?;

        // Dual objective for the self-check: y'b plus reduced costs pinned
        // at their active bounds.
        let mut dual_obj: f64 = (0..m).map(|i| duals[i] * rhs[i]).sum();
        for j in 0..n_total {
            if sx.stat[j] == VStat::Basic {
                continue;
            }
            let d = sx.reduced_cost(j, &cost, &duals);
            let at = sx.xval[j];
            if at != 0.0 {
                dual_obj += d * at;
            }
        }
        let primal_int: f64 = (0..n).map(|j| cost[j] * sx.xval[j]).sum();
        let dual_gap = (primal_int - dual_obj).abs();

        let x: Vec<f64> = sx.xval[..n].to_vec();
        let objective =
            x.iter().zip(&self.obj).map(|(a, b)| a * b).sum::<f64>() + self.obj_constant;
        Ok(LpSolution { x, objective, dual_gap, iterations: sx.iterations })
    }
}

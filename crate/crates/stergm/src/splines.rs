//! B-spline bases with difference penalties and the design blocks built
//! from them: varying-coefficient smooths, actor-nested random smooths and
//! sum-to-zero reparameterizations.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Equidistant B-spline basis over a closed interval.
///
/// The knot grid uses `dim - degree` interior segments with `degree` extra
/// knots replicated outside each boundary at the same spacing, so evaluated
/// rows form a partition of unity on the covered interval.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    degree: usize,
    dim: usize,
    penalty_order: usize,
    knots: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl SplineBasis {
    pub fn new(lo: f64, hi: f64, dim: usize, degree: usize, penalty_order: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Spline(format!(
                "invalid coverage interval [{lo}, {hi}]"
            )));
        }
        if dim < degree + 1 {
            return Err(Error::Spline(format!(
                "basis dimension {dim} must be at least degree + 1 = {}",
                degree + 1
            )));
        }
        if penalty_order < 1 || dim <= penalty_order {
            return Err(Error::Spline(format!(
                "penalty order {penalty_order} must satisfy 1 <= order < dimension {dim}"
            )));
        }
        let nseg = dim - degree;
        let h = (hi - lo) / nseg as f64;
        let knots = (0..dim + degree + 1)
            .map(|i| lo + (i as f64 - degree as f64) * h)
            .collect();
        Ok(SplineBasis {
            degree,
            dim,
            penalty_order,
            knots,
            lo,
            hi,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn penalty_order(&self) -> usize {
        self.penalty_order
    }

    pub fn coverage(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Difference penalty matrix of this basis.
    pub fn penalty(&self) -> Array2<f64> {
        difference_penalty(self.dim, self.penalty_order)
            .expect("basis construction validated dim > order")
    }

    /// Nonzero basis values at `x`: the first active column and the
    /// `degree + 1` values, computed with the de Boor triangular recurrence.
    pub fn eval_sparse(&self, x: f64) -> Result<(usize, Vec<f64>)> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::PointOutsideCoverage {
                point: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let d = self.degree;
        // knot span: t[span] <= x < t[span + 1], clamped so the right
        // boundary belongs to the last interior segment
        let nseg = self.dim - d;
        let h = (self.hi - self.lo) / nseg as f64;
        let mut seg = ((x - self.lo) / h).floor() as usize;
        if seg >= nseg {
            seg = nseg - 1;
        }
        let span = seg + d; // index into the knot vector
        let mut values = vec![0.0; d + 1];
        values[0] = 1.0;
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        for k in 1..=d {
            left[k] = x - self.knots[span + 1 - k];
            right[k] = self.knots[span + k] - x;
            let mut saved = 0.0;
            for r in 0..k {
                let tmp = values[r] / (right[r + 1] + left[k - r]);
                values[r] = saved + right[r + 1] * tmp;
                saved = left[k - r] * tmp;
            }
            values[k] = saved;
        }
        Ok((span - d, values))
    }

    /// Dense evaluation matrix, one row per point.
    pub fn evaluate(&self, points: &[f64]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((points.len(), self.dim));
        for (r, &x) in points.iter().enumerate() {
            let (start, vals) = self.eval_sparse(x)?;
            for (k, &v) in vals.iter().enumerate() {
                out[[r, start + k]] = v;
            }
        }
        Ok(out)
    }
}

/// Evaluate an equidistant B-spline basis covering the range of `points`.
pub fn bspline_basis(points: &[f64], dim: usize, degree: usize) -> Result<Array2<f64>> {
    if points.is_empty() {
        return Err(Error::Spline("no evaluation points".into()));
    }
    let lo = points.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = points.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let basis = SplineBasis::new(lo, hi, dim, degree, 1)?;
    basis.evaluate(points)
}

/// Difference penalty `Δᵀ Δ` of the given order.
pub fn difference_penalty(dim: usize, order: usize) -> Result<Array2<f64>> {
    if order < 1 || dim <= order {
        return Err(Error::Spline(format!(
            "difference penalty needs dimension {dim} > order {order} >= 1"
        )));
    }
    let delta = difference_operator(dim, order);
    Ok(delta.t().dot(&delta))
}

/// The order-th difference operator, composed from first differences.
fn difference_operator(dim: usize, order: usize) -> Array2<f64> {
    let mut delta = Array2::eye(dim);
    for k in 0..order {
        let rows = dim - k;
        let mut step = Array2::zeros((rows - 1, rows));
        for r in 0..rows - 1 {
            step[[r, r]] = -1.0;
            step[[r, r + 1]] = 1.0;
        }
        delta = step.dot(&delta);
    }
    delta
}

/// Orthonormal basis of the polynomial null space of a difference penalty:
/// monomials in the coefficient index up to `order - 1`, Gram-Schmidt
/// orthonormalized.
pub fn penalty_null_basis(dim: usize, order: usize) -> Array2<f64> {
    let mut basis = Array2::zeros((dim, order));
    for p in 0..order {
        let mut v: Array1<f64> = (0..dim).map(|i| (i as f64).powi(p as i32)).collect();
        for q in 0..p {
            let proj: f64 = (0..dim).map(|i| v[i] * basis[[i, q]]).sum();
            for i in 0..dim {
                v[i] -= proj * basis[[i, q]];
            }
        }
        let norm = v.dot(&v).sqrt();
        for i in 0..dim {
            basis[[i, p]] = v[i] / norm;
        }
    }
    basis
}

/// Penalty attached to a design block.
#[derive(Debug, Clone)]
pub enum Penalty {
    /// Full matrix over all block columns.
    Dense(Array2<f64>),
    /// The same sub-penalty repeated along the diagonal, one copy per actor.
    BlockDiag { block: Array2<f64>, count: usize },
}

impl Penalty {
    pub fn dim(&self) -> usize {
        match self {
            Penalty::Dense(m) => m.nrows(),
            Penalty::BlockDiag { block, count } => block.nrows() * count,
        }
    }

    pub fn quad_form(&self, u: &[f64]) -> f64 {
        match self {
            Penalty::Dense(m) => {
                let mut acc = 0.0;
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        acc += u[i] * m[[i, j]] * u[j];
                    }
                }
                acc
            }
            Penalty::BlockDiag { block, count } => {
                let q = block.nrows();
                let mut acc = 0.0;
                for c in 0..*count {
                    let off = c * q;
                    for i in 0..q {
                        for j in 0..q {
                            acc += u[off + i] * block[[i, j]] * u[off + j];
                        }
                    }
                }
                acc
            }
        }
    }

    /// Gradient contribution `P u`.
    pub fn mat_vec(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Penalty::Dense(m) => {
                for i in 0..m.nrows() {
                    let mut acc = 0.0;
                    for j in 0..m.ncols() {
                        acc += m[[i, j]] * u[j];
                    }
                    out[i] = acc;
                }
            }
            Penalty::BlockDiag { block, count } => {
                let q = block.nrows();
                for c in 0..*count {
                    let off = c * q;
                    for i in 0..q {
                        let mut acc = 0.0;
                        for j in 0..q {
                            acc += block[[i, j]] * u[off + j];
                        }
                        out[off + i] = acc;
                    }
                }
            }
        }
    }

    /// Add `scale * P` into `target` starting at `(offset, offset)`.
    pub fn add_scaled_to(&self, target: &mut Array2<f64>, offset: usize, scale: f64) {
        match self {
            Penalty::Dense(m) => {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        target[[offset + i, offset + j]] += scale * m[[i, j]];
                    }
                }
            }
            Penalty::BlockDiag { block, count } => {
                let q = block.nrows();
                for c in 0..*count {
                    let off = offset + c * q;
                    for i in 0..q {
                        for j in 0..q {
                            target[[off + i, off + j]] += scale * block[[i, j]];
                        }
                    }
                }
            }
        }
    }

    /// Dense copy, used by small-scale tests and the REML spectrum.
    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Penalty::Dense(m) => m.clone(),
            Penalty::BlockDiag { block, count } => {
                let q = block.nrows();
                let mut out = Array2::zeros((q * count, q * count));
                for c in 0..*count {
                    for i in 0..q {
                        for j in 0..q {
                            out[[c * q + i, c * q + j]] = block[[i, j]];
                        }
                    }
                }
                out
            }
        }
    }
}

/// Sparse row storage: each row holds a contiguous run of nonzero columns.
#[derive(Debug, Clone)]
pub struct SparseRows {
    starts: Vec<u32>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRows {
    pub fn new() -> Self {
        SparseRows {
            starts: Vec::new(),
            offsets: vec![0],
            values: Vec::new(),
        }
    }

    pub fn push_row(&mut self, start: usize, values: &[f64]) {
        self.starts.push(start as u32);
        self.values.extend_from_slice(values);
        self.offsets.push(self.values.len());
    }

    pub fn n_rows(&self) -> usize {
        self.starts.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (usize, &[f64]) {
        (
            self.starts[r] as usize,
            &self.values[self.offsets[r]..self.offsets[r + 1]],
        )
    }
}

impl Default for SparseRows {
    fn default() -> Self {
        Self::new()
    }
}

/// One column block of a penalized design matrix.
#[derive(Debug, Clone)]
pub struct DesignBlock {
    pub label: String,
    ncols: usize,
    rows: SparseRows,
    pub penalty: Option<Penalty>,
    /// Maps block coefficients back to the original basis coefficients
    /// (set by the sum-to-zero reparameterization).
    pub transform: Option<Array2<f64>>,
}

impl DesignBlock {
    pub fn new(label: impl Into<String>, ncols: usize, rows: SparseRows, penalty: Option<Penalty>) -> Self {
        if let Some(p) = &penalty {
            assert_eq!(p.dim(), ncols, "penalty dimension must match column count");
        }
        DesignBlock {
            label: label.into(),
            ncols,
            rows,
            penalty,
            transform: None,
        }
    }

    /// Single unpenalized column.
    pub fn column(label: impl Into<String>, values: &[f64]) -> Self {
        let mut rows = SparseRows::new();
        for &v in values {
            rows.push_row(0, &[v]);
        }
        DesignBlock::new(label, 1, rows, None)
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.n_rows()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (usize, &[f64]) {
        self.rows.row(r)
    }

    /// Block contribution to the linear predictor of row `r`.
    pub fn row_dot(&self, r: usize, coefs: &[f64]) -> f64 {
        let (start, vals) = self.rows.row(r);
        vals.iter()
            .zip(&coefs[start..start + vals.len()])
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.ncols];
        for r in 0..self.rows.n_rows() {
            let (start, vals) = self.rows.row(r);
            for (k, &v) in vals.iter().enumerate() {
                sums[start + k] += v;
            }
        }
        sums
    }

    /// Dense copy of the block, for oracles and small fixtures.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.n_rows(), self.ncols));
        for r in 0..self.rows.n_rows() {
            let (start, vals) = self.rows.row(r);
            for (k, &v) in vals.iter().enumerate() {
                out[[r, start + k]] = v;
            }
        }
        out
    }
}

/// Varying-coefficient block: row r equals `covariate[r] * B(times[r])`.
pub fn varying_coeff_block(
    covariate: &[f64],
    times: &[f64],
    basis: &SplineBasis,
    label: impl Into<String>,
) -> Result<DesignBlock> {
    if covariate.len() != times.len() {
        return Err(Error::Design(format!(
            "covariate length {} does not match times length {}",
            covariate.len(),
            times.len()
        )));
    }
    let mut rows = SparseRows::new();
    let mut scaled = vec![0.0; basis.degree() + 1];
    for (&c, &t) in covariate.iter().zip(times) {
        let (start, vals) = basis.eval_sparse(t)?;
        for (k, &v) in vals.iter().enumerate() {
            scaled[k] = c * v;
        }
        rows.push_row(start, &scaled);
    }
    Ok(DesignBlock::new(
        label,
        basis.dim(),
        rows,
        Some(Penalty::Dense(basis.penalty())),
    ))
}

/// Actor-nested random-smooth block: one curve per actor, columns grouped
/// actor-major, all curves sharing one smoothing parameter.
///
/// The per-actor penalty augments the difference penalty with the projection
/// onto its polynomial null space, so curve levels are shrunk like ordinary
/// random effects instead of being left unidentified against the intercept.
pub fn random_smooth_block(
    actor_slots: &[usize],
    times: &[f64],
    n_actors: usize,
    basis: &SplineBasis,
    label: impl Into<String>,
) -> Result<DesignBlock> {
    if actor_slots.len() != times.len() {
        return Err(Error::Design(format!(
            "actor column length {} does not match times length {}",
            actor_slots.len(),
            times.len()
        )));
    }
    let q = basis.dim();
    let mut rows = SparseRows::new();
    for (&slot, &t) in actor_slots.iter().zip(times) {
        if slot >= n_actors {
            return Err(Error::Design(format!(
                "actor slot {slot} out of range for {n_actors} nested curves"
            )));
        }
        let (start, vals) = basis.eval_sparse(t)?;
        rows.push_row(slot * q + start, &vals);
    }
    let null = penalty_null_basis(q, basis.penalty_order());
    let mut block = basis.penalty();
    // block + N Nᵀ: proper shrinkage on the null space directions
    for i in 0..q {
        for j in 0..q {
            let mut acc = 0.0;
            for p in 0..null.ncols() {
                acc += null[[i, p]] * null[[j, p]];
            }
            block[[i, j]] += acc;
        }
    }
    Ok(DesignBlock::new(
        label,
        q * n_actors,
        rows,
        Some(Penalty::BlockDiag {
            block,
            count: n_actors,
        }),
    ))
}

/// Reparameterize a block so its fitted contribution sums to zero over the
/// observed rows. Removes one column; the penalty is transformed congruently
/// and the back-transform is stored on the block.
pub fn apply_centering_constraint(block: &DesignBlock) -> Result<DesignBlock> {
    if block.transform.is_some() {
        return Err(Error::Spline(format!(
            "block {} is already constrained",
            block.label
        )));
    }
    let q = block.ncols();
    if q < 2 {
        return Err(Error::Spline(format!(
            "block {} has too few columns to constrain",
            block.label
        )));
    }
    let c = block.column_sums();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Spline(format!(
            "block {} has zero column sums; the constraint is degenerate",
            block.label
        )));
    }
    // Householder reflection sending c to a multiple of e1; the remaining
    // columns span the constrained subspace.
    let mut v = c.clone();
    v[0] += c[0].signum() * norm;
    let vtv: f64 = v.iter().map(|x| x * x).sum();
    let mut z = Array2::zeros((q, q - 1));
    for col in 1..q {
        for row in 0..q {
            let e = if row == col { 1.0 } else { 0.0 };
            z[[row, col - 1]] = e - 2.0 * v[row] * v[col] / vtv;
        }
    }
    let mut rows = SparseRows::new();
    let mut new_vals = vec![0.0; q - 1];
    for r in 0..block.n_rows() {
        let (start, vals) = block.row(r);
        for (slot, item) in new_vals.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &val) in vals.iter().enumerate() {
                acc += val * z[[start + k, slot]];
            }
            *item = acc;
        }
        rows.push_row(0, &new_vals);
    }
    let penalty = match &block.penalty {
        Some(Penalty::Dense(p)) => {
            let zp = z.t().dot(p).dot(&z);
            Some(Penalty::Dense(zp))
        }
        Some(Penalty::BlockDiag { .. }) => {
            return Err(Error::Spline(
                "centering is not applied to actor-nested blocks".into(),
            ))
        }
        None => None,
    };
    let mut out = DesignBlock::new(block.label.clone(), q - 1, rows, penalty);
    out.transform = Some(z);
    Ok(out)
}

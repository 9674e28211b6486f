//! Exact finite-horizon information. Signals of the loop are linear images of
//! the noise basis (x₀, w₁…w_n, v₁…v_n); their Gaussian entropies reduce the
//! three directed informations to log-determinant differences, and the
//! summation definition Σᵢ I(source^i; sink_i | sink^{i−1}) provides an
//! independent oracle at small horizons.
//!
//! Two initial conditions are supported. `Rest` starts the loop at zero state
//! (the covariance of e factors exactly through the unit-diagonal closed-loop
//! map). `Stationary` starts the noise loop in its stationary regime with the
//! message injected at time 1; per-sample quantities then converge to the
//! asymptotic rates without the startup transient.

use crate::error::{Error, Result};
use crate::exec::{default_parallel, map_indexed};
use crate::lti::{expand_series, FeedbackLoop};
use nalgebra::DMatrix;
use serde::Serialize;

/// Dense maps hold n·(1+2n) coefficients; beyond this budget the factored
/// large-n paths are the only option.
pub const MAP_ELEMENT_BUDGET: usize = 1 << 24;

/// Horizon cap for the summation-definition oracle. Cost is O(n⁴), but the
/// binding constraint is numerical: eliminating the dense rest covariance in
/// raw signal coordinates amplifies round-off by |p|² per step for an
/// open-loop pole p, so conditional variances carry an error on the order of
/// |p|^{2n}·ε. For poles up to magnitude 2 that stays below 1e−10 through
/// n = 32 and becomes visible near n = 48.
pub const ORACLE_LIMIT: usize = 32;

/// Relative pivot tolerance deciding "linearly dependent" in conditioning.
/// Exactly dependent directions (x given its own past and e's) leave pivots at
/// the elimination round-off floor, around 1e−11 relative at oracle scale;
/// genuinely informative pivots are bounded below by the posterior message
/// variance, which stays O(1) because the e-map is invertible. 1e−8 splits
/// the two regimes with margin on both sides.
const PIVOT_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalRole {
    X,
    E,
    Y,
    V,
    WPlusV,
}

impl SignalRole {
    /// Short label for CSV headers and density names.
    pub fn label(self) -> &'static str {
        match self {
            SignalRole::X => "x",
            SignalRole::E => "e",
            SignalRole::Y => "y",
            SignalRole::V => "v",
            SignalRole::WPlusV => "w_plus_v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialCondition {
    /// Loop starts at zero state; all randomness enters on 1..=n.
    Rest,
    /// Noise loop already stationary; the message still enters at time 1.
    Stationary,
}

impl std::str::FromStr for InitialCondition {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rest" => Ok(InitialCondition::Rest),
            "stationary" => Ok(InitialCondition::Stationary),
            other => Err(format!("unknown initial condition {other:?} (rest|stationary)")),
        }
    }
}

/// Diagonal covariance of the noise basis (x₀, w₁…w_n, v₁…v_n).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBasis {
    n: usize,
    sigma_02: f64,
    sigma_w2: f64,
    sigma_v2: f64,
}

impl NoiseBasis {
    pub fn new(n: usize, sigma_02: f64, sigma_w2: f64, sigma_v2: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyHorizon);
        }
        if !(sigma_02 > 0.0) || !(sigma_v2 > 0.0) || !(sigma_w2 >= 0.0) {
            return Err(Error::DimensionMismatch(
                "noise basis requires sigma_02 > 0, sigma_v2 > 0, sigma_w2 >= 0".into(),
            ));
        }
        Ok(NoiseBasis {
            n,
            sigma_02,
            sigma_w2,
            sigma_v2,
        })
    }

    pub fn from_loop(lp: &FeedbackLoop, n: usize) -> Result<Self> {
        NoiseBasis::new(n, lp.sigma_02, lp.sigma_w2, lp.sigma_v2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 + 2 * self.n
    }

    /// Variance of basis column k (0 = message, then w block, then v block).
    pub fn variance(&self, k: usize) -> f64 {
        if k == 0 {
            self.sigma_02
        } else if k <= self.n {
            self.sigma_w2
        } else {
            self.sigma_v2
        }
    }

    /// Conditioning a jointly Gaussian model on x₀ leaves covariances with
    /// the message variance zeroed.
    pub(crate) fn without_message(&self) -> Self {
        NoiseBasis {
            sigma_02: 0.0,
            ..self.clone()
        }
    }
}

/// Exact coefficients of one signal block over the noise basis: n rows, one
/// per sample, 1+2n columns.
#[derive(Debug, Clone)]
pub struct LinearSignalMap {
    role: SignalRole,
    mat: DMatrix<f64>,
}

impl LinearSignalMap {
    pub fn role(&self) -> SignalRole {
        self.role
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// The five signal maps of one loop at one horizon.
#[derive(Debug, Clone)]
pub struct SignalMaps {
    pub x: LinearSignalMap,
    pub e: LinearSignalMap,
    pub y: LinearSignalMap,
    pub v: LinearSignalMap,
    pub w_plus_v: LinearSignalMap,
}

impl SignalMaps {
    pub fn get(&self, role: SignalRole) -> &LinearSignalMap {
        match role {
            SignalRole::X => &self.x,
            SignalRole::E => &self.e,
            SignalRole::Y => &self.y,
            SignalRole::V => &self.v,
            SignalRole::WPlusV => &self.w_plus_v,
        }
    }
}

/// Closed-loop impulse response s of S = A/(A−B), first n coefficients
/// (s₀ = 1 by the monic normalizations).
fn closed_loop_series(lp: &FeedbackLoop, n: usize) -> Vec<f64> {
    let a = lp.plant.den();
    let c = a.sub(lp.plant.num());
    expand_series(a, &c, n)
}

/// Response of e to a unit message: a = s ⋆ θ̃ with θ̃ zero-padded/truncated
/// to the horizon.
fn message_response(lp: &FeedbackLoop, n: usize) -> Vec<f64> {
    let s = closed_loop_series(lp, n);
    let theta = &lp.theta;
    let mut a = vec![0.0; n];
    for (t, at) in a.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (tau, th) in theta.iter().enumerate().take(t + 1) {
            acc += s[t - tau] * th;
        }
        *at = acc;
    }
    a
}

/// Builds the x, e, y, v, w+v maps by the loop recursion
/// (A−B)·e = A·(θx₀ + w + v), which is the forward substitution
/// e_i = [G·e]_i + θ_i·x₀ + w_i + v_i written against the stable closed-loop
/// polynomial so coefficients stay bounded for open-loop-unstable plants.
pub fn build_signal_maps(lp: &FeedbackLoop, n: usize) -> Result<SignalMaps> {
    build_signal_maps_with(lp, n, default_parallel())
}

#[doc(hidden)]
pub fn build_signal_maps_with(lp: &FeedbackLoop, n: usize, parallel: bool) -> Result<SignalMaps> {
    lp.require_valid()?;
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    let dim = 1 + 2 * n;
    if n.saturating_mul(dim) > MAP_ELEMENT_BUDGET {
        return Err(Error::HorizonTooLarge {
            n,
            budget: MAP_ELEMENT_BUDGET,
        });
    }

    let s = closed_loop_series(lp, n);
    let a = message_response(lp, n);

    // e = S·(θx₀ + w + v): column 0 is the message response, the w and v
    // blocks are shifted copies of s (lower-triangular Toeplitz).
    let rows = map_indexed(n, parallel, |t| {
        let mut row = vec![0.0; dim];
        row[0] = a[t];
        for tau in 0..=t {
            row[1 + tau] = s[t - tau];
            row[1 + n + tau] = s[t - tau];
        }
        row
    });
    let e_mat = DMatrix::from_row_iterator(n, dim, rows.into_iter().flatten());

    // x = e − w − v and y = e − v, exactly; selectors have unit entries.
    let mut x_mat = e_mat.clone();
    let mut y_mat = e_mat.clone();
    let mut v_mat = DMatrix::zeros(n, dim);
    let mut wv_mat = DMatrix::zeros(n, dim);
    for t in 0..n {
        x_mat[(t, 1 + t)] -= 1.0;
        x_mat[(t, 1 + n + t)] -= 1.0;
        y_mat[(t, 1 + n + t)] -= 1.0;
        v_mat[(t, 1 + n + t)] = 1.0;
        wv_mat[(t, 1 + t)] = 1.0;
        wv_mat[(t, 1 + n + t)] = 1.0;
    }

    Ok(SignalMaps {
        x: LinearSignalMap {
            role: SignalRole::X,
            mat: x_mat,
        },
        e: LinearSignalMap {
            role: SignalRole::E,
            mat: e_mat,
        },
        y: LinearSignalMap {
            role: SignalRole::Y,
            mat: y_mat,
        },
        v: LinearSignalMap {
            role: SignalRole::V,
            mat: v_mat,
        },
        w_plus_v: LinearSignalMap {
            role: SignalRole::WPlusV,
            mat: wv_mat,
        },
    })
}

/// Symmetric positive semidefinite covariance, symmetry enforced at 1e−12
/// relative scale.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    mat: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.amax().max(f64::MIN_POSITIVE);
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "asymmetric covariance at ({i},{j})"
                    )));
                }
            }
        }
        Ok(CovarianceMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// Σ = M·D·Mᵀ over the basis diagonal D, mirrored to be exactly symmetric.
pub fn covariance(map: &LinearSignalMap, basis: &NoiseBasis) -> Result<CovarianceMatrix> {
    covariance_joint(&[map], basis)
}

/// Covariance of several signal blocks stacked in order.
pub fn covariance_joint(maps: &[&LinearSignalMap], basis: &NoiseBasis) -> Result<CovarianceMatrix> {
    let dim = basis.dim();
    let total: usize = maps.iter().map(|m| m.n()).sum();
    for m in maps {
        if m.matrix().ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "map has {} columns, basis dimension is {dim}",
                m.matrix().ncols()
            )));
        }
    }
    let mut stacked = DMatrix::zeros(total, dim);
    let mut row = 0;
    for m in maps {
        stacked.rows_mut(row, m.n()).copy_from(m.matrix());
        row += m.n();
    }
    let mut weighted = stacked.clone();
    for k in 0..dim {
        let var = basis.variance(k);
        weighted.column_mut(k).scale_mut(var);
    }
    let mut sigma = weighted * stacked.transpose();
    // Mirror the lower triangle so round-off cannot break symmetry.
    for i in 0..total {
        for j in (i + 1)..total {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }
    CovarianceMatrix::new(sigma)
}

/// ½·ln((2πe)^k·det Σ) via the Cholesky log-determinant.
pub fn gaussian_entropy(sigma: &CovarianceMatrix) -> Result<f64> {
    let k = sigma.dim();
    let chol = nalgebra::Cholesky::new(sigma.matrix().clone()).ok_or(Error::DegenerateCovariance)?;
    let diag = chol.l_dirty().diagonal();
    let max_pivot = diag.amax();
    let mut half_log_det = 0.0;
    for d in diag.iter() {
        if *d <= 1e-7 * max_pivot {
            // Pivot ratio 1e−14 in variance units: numerically rank-deficient.
            return Err(Error::DegenerateCovariance);
        }
        half_log_det += d.ln();
    }
    Ok(k as f64 * crate::spectral::HALF_LN_TWO_PI_E + half_log_det)
}

/// Stationary autocovariance r(0..n−1) of e's noise part, i.e. of the output
/// of S = A/(A−B) driven by white noise of variance σ_w²+σ_v², computed from
/// a companion-form realization and its discrete Lyapunov equation.
fn stationary_autocov(lp: &FeedbackLoop, n: usize) -> Result<Vec<f64>> {
    let q = lp.sigma_w2 + lp.sigma_v2;
    let a_poly = lp.plant.den();
    let c_poly = a_poly.sub(lp.plant.num());
    let m = a_poly.degree().max(c_poly.degree());
    let mut r = vec![0.0; n];
    if m == 0 {
        r[0] = q;
        return Ok(r);
    }
    let a = |k: usize| a_poly.coeff(k);
    let c = |k: usize| c_poly.coeff(k);

    // x_{k+1} = F x_k + G u_k, e_k = H x_k + D u_k realizes A/C (both monic).
    let f = DMatrix::from_fn(m, m, |i, j| {
        if i == 0 {
            -c(j + 1)
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let h = DMatrix::from_fn(1, m, |_, j| a(j + 1) - c(j + 1));
    let d0 = 1.0;

    // vec(P) solves (I − F⊗F) vec(P) = q·vec(GGᵀ); G = e₁.
    let m2 = m * m;
    let mut lhs = DMatrix::identity(m2, m2);
    for i in 0..m {
        for j in 0..m {
            for p in 0..m {
                for s in 0..m {
                    lhs[(i * m + p, j * m + s)] -= f[(i, j)] * f[(p, s)];
                }
            }
        }
    }
    let mut rhs = DMatrix::zeros(m2, 1);
    rhs[(0, 0)] = q;
    let vec_p = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::DegenerateCovariance)?;
    let p_mat = DMatrix::from_fn(m, m, |i, j| vec_p[(i * m + j, 0)]);

    r[0] = (&h * &p_mat * h.transpose())[(0, 0)] + d0 * d0 * q;
    // r(l) = H F^{l−1} (F P Hᵀ + G D q) for l ≥ 1.
    let mut nu = &f * (&p_mat * h.transpose());
    nu[(0, 0)] += d0 * q;
    for rl in r.iter_mut().skip(1) {
        *rl = (&h * &nu)[(0, 0)];
        nu = &f * nu;
    }
    Ok(r)
}

/// log det Σ_e for the requested initial condition.
///
/// Rest: e = S·(θx₀+w+v) with S unit-diagonal triangular, so
/// det Σ_e = det[(σ_w²+σ_v²)I + σ₀²θ̃θ̃ᵀ] exactly: no factorization needed,
/// and no loss for open-loop-unstable plants whose dense rest covariance is
/// violently ill-conditioned.
///
/// Stationary: Σ_e = Toeplitz(r) + σ₀²aaᵀ, factored densely; the Toeplitz
/// part is bounded below by min|S|²(σ_w²+σ_v²) > 0, so Cholesky is safe.
fn log_det_sigma_e(lp: &FeedbackLoop, n: usize, init: InitialCondition) -> Result<f64> {
    match init {
        InitialCondition::Rest => {
            let q = lp.sigma_w2 + lp.sigma_v2;
            let theta_sq: f64 = lp.theta.iter().take(n).map(|t| t * t).sum();
            Ok(n as f64 * q.ln() + (lp.sigma_02 * theta_sq / q).ln_1p())
        }
        InitialCondition::Stationary => {
            let r = stationary_autocov(lp, n)?;
            let a = message_response(lp, n);
            let s02 = lp.sigma_02;
            let rows = map_indexed(n, default_parallel(), |i| {
                let mut row = vec![0.0; n];
                for (j, rj) in row.iter_mut().enumerate() {
                    let lag = i.abs_diff(j);
                    *rj = r[lag] + s02 * a[i] * a[j];
                }
                row
            });
            let sigma = DMatrix::from_row_iterator(n, n, rows.into_iter().flatten());
            let chol = nalgebra::Cholesky::new(sigma).ok_or(Error::DegenerateCovariance)?;
            Ok(chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum())
        }
    }
}

/// I(yⁿ→eⁿ) = h(eⁿ) − h(vⁿ).
pub fn directed_info_total(lp: &FeedbackLoop, n: usize, init: InitialCondition) -> Result<f64> {
    lp.require_valid()?;
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    Ok(0.5 * (log_det_sigma_e(lp, n, init)? - n as f64 * lp.sigma_v2.ln()))
}

/// I(xⁿ→eⁿ) = h(eⁿ) − h(wⁿ+vⁿ).
pub fn directed_info_from_x(lp: &FeedbackLoop, n: usize, init: InitialCondition) -> Result<f64> {
    lp.require_valid()?;
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    Ok(0.5 * (log_det_sigma_e(lp, n, init)? - n as f64 * (lp.sigma_w2 + lp.sigma_v2).ln()))
}

/// I(yⁿ→eⁿ|x₀) = h(wⁿ+vⁿ) − h(vⁿ) = (n/2)·ln(1 + σ_w²/σ_v²), identical under
/// both initial conditions.
pub fn directed_info_cond(lp: &FeedbackLoop, n: usize, _init: InitialCondition) -> Result<f64> {
    lp.require_valid()?;
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    Ok(n as f64 * 0.5 * ((lp.sigma_w2 + lp.sigma_v2).ln() - lp.sigma_v2.ln()))
}

/// Conditional variance of the last variable given all previous ones, by
/// symmetric elimination. Pivots below tolerance mark exactly dependent
/// directions (the source history always contains them: x is a deterministic
/// function of past e and the message) and are skipped, which realizes the
/// pseudo-inverse conditioning of a degenerate Gaussian. A clearly negative
/// pivot means the input was not PSD.
fn last_conditional_variance(mut m: DMatrix<f64>) -> Result<f64> {
    let d = m.nrows();
    let scale = m
        .diagonal()
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = PIVOT_REL_TOL * scale;
    for k in 0..d.saturating_sub(1) {
        let p = m[(k, k)];
        if p <= tol {
            if p < -1e-6 * scale {
                return Err(Error::DegenerateCovarianceOracle);
            }
            continue;
        }
        for r in (k + 1)..d {
            let f = m[(r, k)] / p;
            if f == 0.0 {
                continue;
            }
            for c in (k + 1)..=r {
                let val = m[(c, k)];
                m[(r, c)] -= f * val;
            }
        }
    }
    let v = m[(d - 1, d - 1)];
    if v <= tol {
        return Err(Error::DegenerateCovarianceOracle);
    }
    Ok(v)
}

/// Directed information straight from the definition,
/// Σᵢ I(source^i; sink_i | sink^{i−1}), each conditional mutual information a
/// log-ratio of conditional variances of the sink innovation. With
/// `condition_on_message` the σ₀² entry of the basis is zeroed (conditioning a
/// jointly Gaussian linear model on x₀ leaves covariances independent of the
/// conditioned value).
pub fn directed_info_definition(
    source: &LinearSignalMap,
    sink: &LinearSignalMap,
    basis: &NoiseBasis,
    condition_on_message: bool,
) -> Result<f64> {
    let n = source.n();
    if sink.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "source horizon {} vs sink horizon {}",
            n,
            sink.n()
        )));
    }
    if n > ORACLE_LIMIT {
        return Err(Error::OracleHorizon {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    let basis = if condition_on_message {
        basis.without_message()
    } else {
        basis.clone()
    };
    let joint = covariance_joint(&[source, sink], &basis)?;
    let sig = joint.matrix();

    let terms = map_indexed(n, default_parallel(), |i0| {
        let i = i0 + 1;
        // Ordering: conditioning set first, the sink innovation last.
        let gather = |sel: &[usize]| DMatrix::from_fn(sel.len(), sel.len(), |r, c| sig[(sel[r], sel[c])]);

        let mut sel_z: Vec<usize> = (0..i - 1).map(|t| n + t).collect();
        sel_z.push(n + i - 1);
        let var_given_past = last_conditional_variance(gather(&sel_z))?;

        let mut sel_zx: Vec<usize> = (0..i - 1).map(|t| n + t).collect();
        sel_zx.extend(0..i);
        sel_zx.push(n + i - 1);
        let var_given_past_and_source = last_conditional_variance(gather(&sel_zx))?;

        Ok(0.5 * (var_given_past.ln() - var_given_past_and_source.ln()))
    });
    let mut acc = 0.0;
    for t in terms {
        acc += t?;
    }
    Ok(acc)
}

/// The three finite-horizon flows with conservation and oracle diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteInfoReport {
    pub n: usize,
    pub init: InitialCondition,
    pub i_total: f64,
    pub i_x: f64,
    pub i_cond: f64,
    /// i_total − i_x − i_cond; the entropies share terms, so this measures
    /// round-off only.
    pub residual: f64,
    pub per_sample_total: f64,
    pub per_sample_x: f64,
    pub per_sample_cond: f64,
    /// Max |entropy-difference − definition| over the three quantities;
    /// populated at rest for n within the oracle limit.
    pub oracle_disagreement: Option<f64>,
}

/// Computes the three entropy-difference quantities, their conservation
/// residual, and (rest, n ≤ oracle limit) the definition-oracle disagreement.
pub fn finite_report(lp: &FeedbackLoop, n: usize, init: InitialCondition) -> Result<FiniteInfoReport> {
    lp.require_valid()?;
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    let lv = lp.sigma_v2.ln();
    let lwv = (lp.sigma_w2 + lp.sigma_v2).ln();
    let ld_e = log_det_sigma_e(lp, n, init)?;
    let nf = n as f64;
    let i_total = 0.5 * (ld_e - nf * lv);
    let i_x = 0.5 * (ld_e - nf * lwv);
    let i_cond = 0.5 * nf * (lwv - lv);
    let residual = i_total - i_x - i_cond;

    let oracle_disagreement = if init == InitialCondition::Rest && n <= ORACLE_LIMIT {
        let maps = build_signal_maps(lp, n)?;
        let basis = NoiseBasis::from_loop(lp, n)?;
        let d_total = directed_info_definition(&maps.y, &maps.e, &basis, false)?;
        let d_x = directed_info_definition(&maps.x, &maps.e, &basis, false)?;
        let d_cond = directed_info_definition(&maps.y, &maps.e, &basis, true)?;
        Some(
            (d_total - i_total)
                .abs()
                .max((d_x - i_x).abs())
                .max((d_cond - i_cond).abs()),
        )
    } else {
        None
    };

    Ok(FiniteInfoReport {
        n,
        init,
        i_total,
        i_x,
        i_cond,
        residual,
        per_sample_total: i_total / nf,
        per_sample_x: i_x / nf,
        per_sample_cond: i_cond / nf,
        oracle_disagreement,
    })
}

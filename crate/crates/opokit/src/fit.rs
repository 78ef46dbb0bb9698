//! Weighted nonlinear least squares for the squeezing model: estimate
//! the oscillation threshold and cavity half width (optionally the
//! detection loss) from squeezing/anti-squeezing levels measured across
//! pump powers and frequencies.
//!
//! The solver is a damped Gauss-Newton loop: solve the normal equations
//! with a Levenberg-style multiplicative damping of the diagonal, grow
//! the damping whenever a step fails to reduce the objective or leaves
//! the feasible region (any observation pushed to `xi >= 1`), shrink it
//! on success. The Jacobian is numerical, central differences with a
//! relative step of 1e-6. Residuals are formed in dB by default, which
//! weights the squeezed and anti-squeezed branches evenly; a linear
//! variance mode is available as a flag.

use rand::SeedableRng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::squeezing::{self, Branch, SqueezerParams};

/// Default 1-sigma uncertainty assigned to observations that do not
/// carry one (dB).
pub const DEFAULT_UNCERTAINTY_DB: f64 = 0.1;

/// A single measured squeezing or anti-squeezing level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingObservation {
    /// Pump power before the cavity (W).
    pub pump_power: f64,
    /// Measurement frequency (Hz).
    pub frequency: f64,
    pub branch: Branch,
    /// Level in dB relative to shot noise (negative when squeezed).
    pub level_db: f64,
    /// 1-sigma uncertainty of the level (dB).
    pub uncertainty_db: f64,
}

impl SqueezingObservation {
    pub fn validate(&self) -> Result<()> {
        if !(self.pump_power > 0.0) {
            return Err(Error::validation(format!(
                "observation pump_power must be > 0 (got {})",
                self.pump_power
            )));
        }
        if !(self.frequency > 0.0) {
            return Err(Error::validation(format!(
                "observation frequency must be > 0 (got {})",
                self.frequency
            )));
        }
        if !(self.uncertainty_db > 0.0) {
            return Err(Error::validation(format!(
                "observation uncertainty must be > 0 (got {})",
                self.uncertainty_db
            )));
        }
        Ok(())
    }
}

/// Model parameters held fixed during the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedParams {
    pub output_coupler_transmittance: f64,
    pub intra_cavity_loss: f64,
    /// `Some(eta)` pins the detection loss; `None` frees it as a third
    /// fit parameter bounded to [0, 0.5].
    pub total_detection_loss: Option<f64>,
}

impl FixedParams {
    /// T = 10%, L = 0.38%, eta pinned at 7%.
    pub fn reference_design() -> Self {
        FixedParams {
            output_coupler_transmittance: 0.10,
            intra_cavity_loss: 0.0038,
            total_detection_loss: Some(0.07),
        }
    }
}

/// Candidate (or initial-guess) values of the free parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    /// Oscillation threshold (W).
    pub threshold_power: f64,
    /// Cavity half width (Hz).
    pub cavity_half_width: f64,
    /// Detection loss; must be `Some` exactly when the fit frees it.
    pub detection_loss: Option<f64>,
}

/// Solver knobs. The defaults implement the documented stopping rule:
/// relative parameter change below 1e-8, relative objective change
/// below 1e-10, or 200 iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Fit residuals in linear variance instead of dB.
    pub linear_residuals: bool,
    pub max_iterations: usize,
    pub param_tol: f64,
    pub objective_tol: f64,
    pub jacobian_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            linear_residuals: false,
            max_iterations: 200,
            param_tol: 1e-8,
            objective_tol: 1e-10,
            jacobian_step: 1e-6,
        }
    }
}

/// Per-parameter 1-sigma standard errors from the Jacobian at the
/// optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardErrors {
    pub threshold_power: f64,
    pub cavity_half_width: f64,
    pub detection_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub threshold_power: f64,
    pub cavity_half_width: f64,
    pub detection_loss: Option<f64>,
    /// Weighted residual norm `sqrt(sum((r_i / sigma_i)^2))` at the
    /// optimum.
    pub residual_norm: f64,
    pub standard_errors: StandardErrors,
    pub converged: bool,
    pub iterations: usize,
}

struct Model<'a> {
    observations: &'a [SqueezingObservation],
    fixed: FixedParams,
    linear: bool,
    eta_free: bool,
}

const ETA_UPPER_BOUND: f64 = 0.5;

impl Model<'_> {
    fn n_params(&self) -> usize {
        if self.eta_free {
            3
        } else {
            2
        }
    }

    fn feasible(&self, p: &[f64]) -> bool {
        let (pth, fh) = (p[0], p[1]);
        if !(pth > 0.0 && fh > 0.0) || !pth.is_finite() || !fh.is_finite() {
            return false;
        }
        if self.eta_free && !(0.0..=ETA_UPPER_BOUND).contains(&p[2]) {
            return false;
        }
        self.observations.iter().all(|o| o.pump_power < pth)
    }

    fn eta(&self, p: &[f64]) -> f64 {
        if self.eta_free {
            p[2]
        } else {
            self.fixed.total_detection_loss.expect("eta pinned")
        }
    }

    /// Weighted residuals, or None when the candidate is infeasible.
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        if !self.feasible(p) {
            return None;
        }
        let mut out = Vec::with_capacity(self.observations.len());
        for obs in self.observations {
            let params = SqueezerParams {
                output_coupler_transmittance: self.fixed.output_coupler_transmittance,
                intra_cavity_loss: self.fixed.intra_cavity_loss,
                total_detection_loss: self.eta(p),
                pump_power: obs.pump_power,
                threshold_power: p[0],
                cavity_half_width: p[1],
            };
            let v = squeezing::variance(&params, obs.frequency, obs.branch).ok()?;
            let r = if self.linear {
                (v - squeezing::from_db(obs.level_db)) / obs.uncertainty_db
            } else {
                (squeezing::to_db(v).ok()? - obs.level_db) / obs.uncertainty_db
            };
            out.push(r);
        }
        Some(out)
    }

    fn objective(&self, p: &[f64]) -> Option<f64> {
        Some(self.residuals(p)?.iter().map(|r| r * r).sum())
    }

    /// Central-difference Jacobian of the weighted residuals. Falls back
    /// to a one-sided difference when a perturbed point leaves the
    /// feasible region.
    fn jacobian(&self, p: &[f64], step: f64) -> Option<Vec<Vec<f64>>> {
        let base = self.residuals(p)?;
        let m = base.len();
        let n = p.len();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let h = step * p[j].abs().max(step);
            let mut plus = p.to_vec();
            plus[j] += h;
            let mut minus = p.to_vec();
            minus[j] -= h;
            let rp = self.residuals(&plus);
            let rm = self.residuals(&minus);
            let col: Vec<f64> = match (rp, rm) {
                (Some(rp), Some(rm)) => (0..m).map(|i| (rp[i] - rm[i]) / (2.0 * h)).collect(),
                (Some(rp), None) => (0..m).map(|i| (rp[i] - base[i]) / h).collect(),
                (None, Some(rm)) => (0..m).map(|i| (base[i] - rm[i]) / h).collect(),
                (None, None) => return None,
            };
            cols.push(col);
        }
        Some(cols)
    }
}

/// Weighted least-squares objective
/// `sum(((model_i - level_i) / sigma_i)^2)` for a parameter candidate.
pub fn objective(
    observations: &[SqueezingObservation],
    fixed: &FixedParams,
    params: &FitParams,
    config: &FitConfig,
) -> Result<f64> {
    for obs in observations {
        obs.validate()?;
    }
    let model = make_model(observations, fixed, params, config)?;
    let p = pack(params);
    model.objective(&p).ok_or_else(|| {
        Error::validation(format!(
            "infeasible parameters: threshold {} W does not exceed every pump power",
            params.threshold_power
        ))
    })
}

fn make_model<'a>(
    observations: &'a [SqueezingObservation],
    fixed: &FixedParams,
    params: &FitParams,
    config: &FitConfig,
) -> Result<Model<'a>> {
    let eta_free = fixed.total_detection_loss.is_none();
    if eta_free != params.detection_loss.is_some() {
        return Err(Error::validation(
            "detection loss must be supplied in the guess exactly when it is free".to_string(),
        ));
    }
    Ok(Model {
        observations,
        fixed: *fixed,
        linear: config.linear_residuals,
        eta_free,
    })
}

fn pack(params: &FitParams) -> Vec<f64> {
    let mut p = vec![params.threshold_power, params.cavity_half_width];
    if let Some(eta) = params.detection_loss {
        p.push(eta);
    }
    p
}

/// Cholesky solve of the SPD system `A x = b` (n <= 3). No pivoting, so
/// the arithmetic is deterministic and scale-covariant.
#[allow(clippy::needless_range_loop)]
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // forward then back substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

/// Inverse of an SPD matrix via Cholesky column solves.
fn spd_inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cholesky_solve(a, &e)?;
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

fn normal_matrix(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cols.len();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            h[i][j] = s;
            h[j][i] = s;
        }
    }
    h
}

fn gradient(cols: &[Vec<f64>], r: &[f64]) -> Vec<f64> {
    cols.iter()
        .map(|c| c.iter().zip(r).map(|(a, b)| a * b).sum())
        .collect()
}

/// Fit `(P_th, f_HWHM)` — and the detection loss when it is freed — to
/// measured levels by damped Gauss-Newton. Deterministic for identical
/// inputs.
pub fn fit_squeezing(
    observations: &[SqueezingObservation],
    fixed: &FixedParams,
    initial_guess: &FitParams,
    config: &FitConfig,
) -> Result<FitResult> {
    for obs in observations {
        obs.validate()?;
    }
    let model = make_model(observations, fixed, initial_guess, config)?;
    if observations.len() < model.n_params() {
        return Err(Error::validation(format!(
            "need at least {} observations to fit {} parameters",
            model.n_params(),
            model.n_params()
        )));
    }
    {
        let mut powers: Vec<f64> = observations.iter().map(|o| o.pump_power).collect();
        powers.sort_by(f64::total_cmp);
        powers.dedup();
        let mut freqs: Vec<f64> = observations.iter().map(|o| o.frequency).collect();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        if powers.len() < 2 || freqs.len() < 2 {
            return Err(Error::validation(
                "fitting both parameters needs at least two distinct pump powers \
                 and two distinct frequencies"
                    .to_string(),
            ));
        }
    }

    let mut p = pack(initial_guess);
    let mut obj = model.objective(&p).ok_or_else(|| {
        Error::validation(format!(
            "infeasible initial guess: threshold {} W does not exceed every pump power",
            initial_guess.threshold_power
        ))
    })?;

    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.max_iterations {
        iterations = iter;
        let r = model.residuals(&p).expect("current point is feasible");
        let cols = model
            .jacobian(&p, config.jacobian_step)
            .ok_or_else(|| Error::numerical("Jacobian evaluation failed".to_string()))?;
        let h = normal_matrix(&cols);
        let g = gradient(&cols, &r);

        let mut accepted = false;
        let mut step_rel = 0.0;
        let mut obj_new = obj;
        for _ in 0..60 {
            let mut damped = h.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                let d = if h[i][i] > 0.0 { h[i][i] } else { 1.0 };
                row[i] += lambda * d;
            }
            let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
            if let Some(delta) = cholesky_solve(&damped, &rhs) {
                let p_new: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
                if let Some(o) = model.objective(&p_new) {
                    if o <= obj {
                        step_rel = delta
                            .iter()
                            .zip(&p)
                            .map(|(d, v)| d.abs() / v.abs().max(1e-300))
                            .fold(0.0, f64::max);
                        p = p_new;
                        obj_new = o;
                        lambda = (lambda / 3.0).max(1e-14);
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 4.0;
            if lambda > 1e15 {
                break;
            }
        }

        if !accepted {
            // Damping saturated without an acceptable step; the current
            // point is the (possibly local) optimum within float noise.
            converged = true;
            break;
        }
        let rel_obj = (obj - obj_new) / obj.max(1e-300);
        obj = obj_new;
        if step_rel < config.param_tol || rel_obj < config.objective_tol {
            converged = true;
            break;
        }
    }

    let result = finalize(&model, &p, obj, converged, iterations, config)?;
    if !converged {
        return Err(Error::FitDidNotConverge {
            iterations,
            best: Box::new(result),
        });
    }
    Ok(result)
}

fn finalize(
    model: &Model<'_>,
    p: &[f64],
    obj: f64,
    converged: bool,
    iterations: usize,
    config: &FitConfig,
) -> Result<FitResult> {
    let cols = model
        .jacobian(p, config.jacobian_step)
        .ok_or_else(|| Error::numerical("Jacobian evaluation failed at optimum".to_string()))?;
    let h = normal_matrix(&cols);
    let cov = spd_inverse(&h);
    let se = |j: usize| -> f64 {
        cov.as_ref()
            .map(|c| c[j][j].max(0.0).sqrt())
            .unwrap_or(f64::INFINITY)
    };
    Ok(FitResult {
        threshold_power: p[0],
        cavity_half_width: p[1],
        detection_loss: if model.eta_free { Some(p[2]) } else { None },
        residual_norm: obj.sqrt(),
        standard_errors: StandardErrors {
            threshold_power: se(0),
            cavity_half_width: se(1),
            detection_loss: if model.eta_free { Some(se(2)) } else { None },
        },
        converged,
        iterations,
    })
}

/// Generate both branches of Eq-model levels on a pump-power x frequency
/// grid, with i.i.d. Gaussian dB noise. Reproducible from the seed.
///
/// The `pump_power` field of `params` is ignored; each grid power is
/// validated against the threshold instead.
pub fn synth_dataset(
    params: &SqueezerParams,
    pump_powers: &[f64],
    frequencies: &[f64],
    noise_sigma_db: f64,
    seed: u64,
) -> Result<Vec<SqueezingObservation>> {
    if noise_sigma_db < 0.0 {
        return Err(Error::validation(format!(
            "noise sigma must be >= 0 (got {noise_sigma_db})"
        )));
    }
    for &power in pump_powers {
        if !(power > 0.0 && power < params.threshold_power) {
            return Err(Error::validation(format!(
                "pump power {power} W must lie in (0, {}) W",
                params.threshold_power
            )));
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
    let uncertainty = if noise_sigma_db > 0.0 {
        noise_sigma_db
    } else {
        DEFAULT_UNCERTAINTY_DB
    };
    let mut out = Vec::with_capacity(pump_powers.len() * frequencies.len() * 2);
    for &power in pump_powers {
        let point = SqueezerParams {
            pump_power: power,
            ..*params
        };
        for &f in frequencies {
            for branch in [Branch::Squeezed, Branch::Anti] {
                let level = squeezing::to_db(squeezing::variance(&point, f, branch)?)?;
                let noise = if noise_sigma_db > 0.0 {
                    noise_sigma_db * normal.sample(&mut rng)
                } else {
                    0.0
                };
                out.push(SqueezingObservation {
                    pump_power: power,
                    frequency: f,
                    branch,
                    level_db: level + noise,
                    uncertainty_db: uncertainty,
                });
            }
        }
    }
    Ok(out)
}

/// Parse an observation CSV: header
/// `pump_power_w,frequency_hz,branch,level_db,uncertainty_db`, branch
/// one of `squeezed`/`anti`, empty uncertainty defaults to 0.1 dB.
/// `#` lines are comments.
pub fn parse_observations_csv(path: impl AsRef<std::path::Path>) -> Result<Vec<SqueezingObservation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_observations_str(&text, &path.display().to_string())
}

pub fn parse_observations_str(text: &str, origin: &str) -> Result<Vec<SqueezingObservation>> {
    const HEADER: &str = "pump_power_w,frequency_hz,branch,level_db,uncertainty_db";
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut saw_header = false;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != HEADER {
                return Err(perr(lineno, format!("expected header '{HEADER}'")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(perr(lineno, format!("expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| perr(lineno, format!("bad {what} '{s}'")))
        };
        let obs = SqueezingObservation {
            pump_power: num(fields[0], "pump power")?,
            frequency: num(fields[1], "frequency")?,
            branch: fields[2]
                .parse()
                .map_err(|e| perr(lineno, format!("{e}")))?,
            level_db: num(fields[3], "level")?,
            uncertainty_db: if fields[4].is_empty() {
                DEFAULT_UNCERTAINTY_DB
            } else {
                num(fields[4], "uncertainty")?
            },
        };
        obs.validate()?;
        out.push(obs);
    }
    if !saw_header {
        return Err(perr(1, format!("missing '{HEADER}' header")));
    }
    Ok(out)
}

/// Serialize observations in the CSV format `parse_observations_csv`
/// reads.
pub fn observations_to_csv(observations: &[SqueezingObservation]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("pump_power_w,frequency_hz,branch,level_db,uncertainty_db\n");
    for o in observations {
        let _ = writeln!(
            out,
            "{:?},{:?},{},{:?},{:?}",
            o.pump_power,
            o.frequency,
            o.branch.label(),
            o.level_db,
            o.uncertainty_db
        );
    }
    out
}

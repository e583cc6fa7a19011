//! Randomized lattice estimator for multivariate t box probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::special::{chi2_quantile, phi, phi_density, phi_inv};
use super::{CorrelationMatrix, QmcConfig};
use crate::error::{Error, Result};

/// Conditional variances at or below this are treated as exactly zero: the
/// variable is then deterministic given its predecessors and contributes an
/// indicator factor instead of a normal CDF difference.
const SINGULAR_VAR_TOL: f64 = 1e-9;

/// A rectangle probability estimate with its cross-shift standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvtProbability {
    pub value: f64,
    /// Standard error of the estimate across the random shifts.
    pub std_error: f64,
    /// False when the point budget ran out before `target_abs_error`.
    pub converged: bool,
    /// Lattice points spent per shift.
    pub points_per_shift: u64,
}

/// Estimate `P(lower <= T <= upper)` for a central q-variate t vector with
/// correlation `r` and `df` degrees of freedom (`f64::INFINITY` selects the
/// multivariate normal limit).
///
/// Identical inputs and seed give bit-identical output regardless of the
/// number of worker threads.
pub fn mvt_rectangle_probability(
    lower: &[f64],
    upper: &[f64],
    r: &CorrelationMatrix,
    df: f64,
    cfg: &QmcConfig,
) -> Result<MvtProbability> {
    let q = r.dim();
    if lower.len() != q || upper.len() != q {
        return Err(Error::InvalidConfig(format!(
            "bounds of length {}/{} do not match dimension {q}",
            lower.len(),
            upper.len()
        )));
    }
    if !(df >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "degrees of freedom {df} must be >= 1 (or infinite)"
        )));
    }
    for i in 0..q {
        if lower[i].is_nan() || upper[i].is_nan() || lower[i] >= upper[i] {
            return Err(Error::InvalidConfig(format!(
                "bounds [{}, {}] at coordinate {i} are not an interval",
                lower[i], upper[i]
            )));
        }
    }
    let cfg = cfg.clone().validated()?;
    if lower.iter().all(|l| *l == f64::NEG_INFINITY) && upper.iter().all(|u| *u == f64::INFINITY) {
        return Ok(MvtProbability {
            value: 1.0,
            std_error: 0.0,
            converged: true,
            points_per_shift: 0,
        });
    }

    let radial = df.is_finite();
    let prep = prepare(lower, upper, r, radial);

    let shifts = cfg.randomizations as usize;
    let mut states: Vec<ShiftState> = (0..shifts)
        .map(|s| ShiftState::new(cfg.seed, s as u64, prep.uniform_dims))
        .collect();

    let mut used: u64 = 0;
    let mut stage = cfg.sample_budget.min(4096);
    loop {
        states
            .par_iter_mut()
            .for_each(|st| st.extend(&prep, df, stage));
        used += stage;
        let (value, std_error) = combine(&states, used);
        let converged = std_error <= cfg.target_abs_error;
        if converged || used >= cfg.sample_budget {
            return Ok(MvtProbability {
                value: value.clamp(0.0, 1.0),
                std_error,
                converged,
                points_per_shift: used,
            });
        }
        stage = used.min(cfg.sample_budget - used);
    }
}

fn combine(states: &[ShiftState], points: u64) -> (f64, f64) {
    let m = states.len() as f64;
    let means: Vec<f64> = states.iter().map(|s| s.sum / points as f64).collect();
    let value = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|v| (v - value) * (v - value)).sum::<f64>() / (m - 1.0);
    (value, (var / m).sqrt())
}

/// Reordered Cholesky factorization together with the permuted bounds.
struct Prepared {
    q: usize,
    /// Row-major lower-triangular factor.
    chol: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Deterministic coordinates (zero conditional variance).
    singular: Vec<bool>,
    /// Richtmyer generators, one per consumed uniform.
    generators: Vec<f64>,
    uniform_dims: usize,
    radial: bool,
}

/// Variable-reordered Cholesky in the style of Genz: at each step pick the
/// remaining variable with the smallest expected conditional interval, which
/// concentrates the integrand's variation in the early (better distributed)
/// lattice coordinates. Zero pivots mark deterministic coordinates; their
/// columns are zeroed, which is exact for a PSD matrix.
fn prepare(lower: &[f64], upper: &[f64], r: &CorrelationMatrix, radial: bool) -> Prepared {
    let q = r.dim();
    let mut mat = r.entries().clone();
    let mut a: Vec<f64> = lower.to_vec();
    let mut b: Vec<f64> = upper.to_vec();
    let mut chol = vec![0.0f64; q * q];
    let mut singular = vec![false; q];
    let mut y_exp = vec![0.0f64; q];

    for i in 0..q {
        // Select the hardest remaining variable.
        let mut best = i;
        let mut best_width = f64::INFINITY;
        for j in i..q {
            let mut v = mat[(j, j)];
            let mut center = 0.0;
            for m in 0..i {
                v -= chol[j * q + m] * chol[j * q + m];
                center += chol[j * q + m] * y_exp[m];
            }
            if v <= SINGULAR_VAR_TOL {
                continue;
            }
            let denom = v.sqrt();
            let lo = if a[j].is_infinite() {
                0.0
            } else {
                phi((a[j] - center) / denom)
            };
            let hi = if b[j].is_infinite() {
                1.0
            } else {
                phi((b[j] - center) / denom)
            };
            let width = hi - lo;
            if width < best_width {
                best_width = width;
                best = j;
            }
        }
        if best != i {
            a.swap(i, best);
            b.swap(i, best);
            mat.swap_rows(i, best);
            mat.swap_columns(i, best);
            for m in 0..i {
                chol.swap(i * q + m, best * q + m);
            }
        }

        let mut v = mat[(i, i)];
        for m in 0..i {
            v -= chol[i * q + m] * chol[i * q + m];
        }
        if v <= SINGULAR_VAR_TOL {
            singular[i] = true;
            for k in i..q {
                chol[k * q + i] = 0.0;
            }
            y_exp[i] = 0.0;
            continue;
        }
        let diag = v.sqrt();
        chol[i * q + i] = diag;
        for k in i + 1..q {
            let mut dot = mat[(k, i)];
            for m in 0..i {
                dot -= chol[k * q + m] * chol[i * q + m];
            }
            chol[k * q + i] = dot / diag;
        }

        // Expected value of the truncated conditional, reused by later
        // selection rounds.
        let mut center = 0.0;
        for m in 0..i {
            center += chol[i * q + m] * y_exp[m];
        }
        let lo_t = if a[i].is_infinite() {
            f64::NEG_INFINITY
        } else {
            (a[i] - center) / diag
        };
        let hi_t = if b[i].is_infinite() {
            f64::INFINITY
        } else {
            (b[i] - center) / diag
        };
        let width = phi(hi_t) - phi(lo_t);
        y_exp[i] = if width > 1e-12 {
            (density_or_zero(lo_t) - density_or_zero(hi_t)) / width
        } else {
            0.0
        };
    }

    let sequential_dims = (0..q.saturating_sub(1)).filter(|&i| !singular[i]).count();
    let uniform_dims = sequential_dims + usize::from(radial);
    Prepared {
        q,
        chol,
        lower: a,
        upper: b,
        singular,
        generators: richtmyer_generators(uniform_dims),
        uniform_dims,
        radial,
    }
}

fn density_or_zero(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        phi_density(x)
    }
}

/// Square roots of the first `n` primes.
fn richtmyer_generators(n: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if (2..=((candidate as f64).sqrt() as u64)).all(|d| !candidate.is_multiple_of(d)) {
            primes.push((candidate as f64).sqrt());
        }
        candidate += 1;
    }
    primes
}

/// One random shift's running estimate. Each shift owns a deterministic
/// substream derived from (seed, shift index), so results do not depend on
/// how shifts are scheduled across threads.
struct ShiftState {
    shift: Vec<f64>,
    next_point: u64,
    sum: f64,
    y_buf: Vec<f64>,
}

impl ShiftState {
    fn new(seed: u64, index: u64, dims: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let shift: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
        ShiftState {
            shift,
            next_point: 1,
            sum: 0.0,
            y_buf: Vec::new(),
        }
    }

    fn extend(&mut self, prep: &Prepared, df: f64, points: u64) {
        self.y_buf.resize(prep.q, 0.0);
        let end = self.next_point + points;
        for k in self.next_point..end {
            self.sum += integrand(prep, df, k, &self.shift, &mut self.y_buf);
        }
        self.next_point = end;
    }
}

/// Value of the separated integrand at lattice point `k` under a shift.
fn integrand(prep: &Prepared, df: f64, k: u64, shift: &[f64], y: &mut [f64]) -> f64 {
    let kf = k as f64;
    let mut dim = 0usize;
    let mut next_u = |prep: &Prepared| {
        let x = kf * prep.generators[dim] + shift[dim];
        dim += 1;
        (2.0 * x.fract() - 1.0).abs()
    };

    // Radial scale for finite df: s = sqrt(chi2_inv(u)/df).
    let s = if prep.radial {
        (chi2_quantile(next_u(prep), df) / df).sqrt()
    } else {
        1.0
    };

    let q = prep.q;
    let mut f = 1.0f64;
    for i in 0..q {
        let row = &prep.chol[i * q..i * q + i];
        let center: f64 = row.iter().zip(&y[..i]).map(|(c, v)| c * v).sum();
        if prep.singular[i] {
            let lo_ok = prep.lower[i].is_infinite() || s * prep.lower[i] <= center;
            let hi_ok = prep.upper[i].is_infinite() || center <= s * prep.upper[i];
            if !(lo_ok && hi_ok) {
                return 0.0;
            }
            y[i] = 0.0;
            continue;
        }
        let diag = prep.chol[i * q + i];
        let d = if prep.lower[i].is_infinite() {
            0.0
        } else {
            phi((s * prep.lower[i] - center) / diag)
        };
        let e = if prep.upper[i].is_infinite() {
            1.0
        } else {
            phi((s * prep.upper[i] - center) / diag)
        };
        let w = e - d;
        if w <= 0.0 {
            return 0.0;
        }
        f *= w;
        if i + 1 < q {
            let p = (d + next_u(prep) * w).clamp(1e-16, 1.0 - 1e-16);
            y[i] = phi_inv(p);
        }
    }
    f
}

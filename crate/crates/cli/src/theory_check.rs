//! Property suite over random discretized densities: the minimum of the
//! virtual criterion, the closed-form optimal discriminator, and convergence
//! of descent in density space.

use gan_core::numkit::RngState;
use gan_core::theory::{
    density_descent, jsd, optimal_discriminator, virtual_criterion, y_star, Grid, GridDensity, NEG_LOG_4,
};

use crate::error::{CliError, CliResult};

pub const DESCENT_STEPS: usize = 5000;
pub const DESCENT_LR: f64 = 50.0;

const MIN_TOL: f64 = 1e-12;
const EQUAL_TOL: f64 = 1e-9;
const AGREEMENT_TOL: f64 = 1e-10;
const ARGMAX_TOL: f64 = 1e-6;
const CONVERGED_JSD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub cases: usize,
    /// Largest error over the cases.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub bins: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl TheoryReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    pub fn render(&self) -> String {
        let mut out = format!("theory check: {} bins, {} trials, seed {}\n", self.bins, self.trials, self.seed);
        out.push_str(&format!("{:<6} {:<44} {:>6} {:>12} {:>10}\n", "result", "check", "cases", "worst", "tolerance"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<6} {:<44} {:>6} {:>12.3e} {:>10.1e}\n",
                if r.passed() { "PASS" } else { "FAIL" },
                r.name,
                r.cases,
                r.worst,
                r.tolerance
            ));
        }
        out
    }
}

/// Random strictly positive density on `bins` unit-width bins.
pub fn random_density(bins: usize, rng: &mut RngState) -> GridDensity {
    let grid = Grid::new(0.0, 1.0, bins).expect("bins >= 1");
    let weights: Vec<f64> = (0..bins).map(|_| 0.01 + rng.next_f64()).collect();
    GridDensity::from_weights(grid, &weights).expect("positive weights")
}

/// Maximizer of `a ln y + b ln(1 - y)` by repeated grid refinement: 1001
/// points over the current bracket, then zoom to the two cells around the
/// best point, until the bracket is below 1e-9.
pub fn grid_argmax(a: f64, b: f64) -> f64 {
    let f = |y: f64| {
        let la = if a > 0.0 { a * y.ln() } else { 0.0 };
        let lb = if b > 0.0 { b * (1.0 - y).ln() } else { 0.0 };
        la + lb
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = 0.5;
    while hi - lo > 1e-9 {
        let n = 1000;
        let step = (hi - lo) / n as f64;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..=n {
            let y = lo + step * i as f64;
            let v = f(y);
            if v > best_val {
                best_val = v;
                best = y;
            }
        }
        lo = (best - step).max(0.0);
        hi = (best + step).min(1.0);
    }
    best
}

/// Runs the suite. `corrupt_tolerance` replaces every tolerance with a
/// negative one so that every check fails; it exists to exercise the
/// failure path.
pub fn cmd_theory_check(bins: usize, trials: usize, seed: u64, corrupt_tolerance: bool) -> CliResult<TheoryReport> {
    if bins < 2 {
        return Err(CliError::input(format!("bins must be at least 2, got {bins}")));
    }
    if trials == 0 {
        return Err(CliError::input("trials must be at least 1"));
    }
    let tol = |t: f64| if corrupt_tolerance { -1.0 } else { t };
    let mut rng = RngState::new(seed);
    let fail = CliError::failed;

    let mut below_min = 0.0f64;
    let mut at_equality = 0.0f64;
    let mut agreement = 0.0f64;
    let mut argmax = 0.0f64;
    let mut optimal_field = 0.0f64;
    let mut descent_jsd = 0.0f64;
    let mut descent_rise = 0.0f64;
    for _ in 0..trials {
        let p_data = random_density(bins, &mut rng);
        let p_g = random_density(bins, &mut rng);

        let c = virtual_criterion(&p_data, &p_g).map_err(fail)?;
        below_min = below_min.max(NEG_LOG_4 - c);
        let c_eq = virtual_criterion(&p_data, &p_data).map_err(fail)?;
        at_equality = at_equality.max((c_eq - NEG_LOG_4).abs());
        let expectation: f64 = p_data
            .probs()
            .iter()
            .zip(p_g.probs())
            .map(|(&a, &b)| a * (a / (a + b)).ln() + b * (b / (a + b)).ln())
            .sum();
        let divergence = NEG_LOG_4 + 2.0 * jsd(&p_data, &p_g).map_err(fail)?;
        agreement = agreement.max((expectation - divergence).abs());

        let field = optimal_discriminator(&p_data, &p_g).map_err(fail)?;
        for (i, (&a, &b)) in p_data.probs().iter().zip(p_g.probs()).enumerate() {
            let closed = y_star(a, b).map_err(fail)?;
            argmax = argmax.max((grid_argmax(a, b) - closed).abs());
            let d = field.get(i).ok_or_else(|| CliError::failed("optimal discriminator undefined on a positive bin"))?;
            optimal_field = optimal_field.max((d - closed).abs());
        }

        let start = GridDensity::uniform(*p_data.grid());
        let traj = density_descent(&p_data, &start, DESCENT_STEPS, DESCENT_LR).map_err(fail)?;
        let last = traj.last().expect("trajectory has a start record");
        descent_jsd = descent_jsd.max(last.jsd);
        for pair in traj.records.windows(2) {
            descent_rise = descent_rise.max(pair[1].criterion - pair[0].criterion);
        }
    }

    let row = |name, worst, t| CheckRow { name, cases: trials, worst, tolerance: tol(t) };
    let rows = vec![
        row("criterion never below -log 4", below_min.max(0.0), MIN_TOL),
        row("criterion equals -log 4 at p_g = p_data", at_equality, EQUAL_TOL),
        row("expectation and JSD forms of C(G) agree", agreement, AGREEMENT_TOL),
        CheckRow { cases: trials * bins, ..row("closed-form D* matches grid search", argmax, ARGMAX_TOL) },
        CheckRow { cases: trials * bins, ..row("optimal_discriminator matches closed form", optimal_field, 0.0) },
        row("density descent reaches JSD < 1e-4", descent_jsd, CONVERGED_JSD),
        row("density descent C(G) non-increasing", descent_rise.max(0.0), 0.0),
    ];
    Ok(TheoryReport { bins, trials, seed, rows })
}

//! Densities on a fixed 1-D grid and the closed-form quantities of the
//! minimax game over them: the optimal discriminator, KL and Jensen–Shannon
//! divergences, the virtual criterion `C(G)` and its minimization directly
//! in density space.
//!
//! All logarithms are natural, so divergences are in nats. `0 · log 0` is
//! taken as `0` everywhere.

mod descent;
mod density;

pub use descent::{density_descent, read_trajectory_csv, DescentRecord, Trajectory};
pub use density::{Grid, GridDensity};

use thiserror::Error;

/// `-log 4`, the value of the game when the generator matches the data.
pub const NEG_LOG_4: f64 = -1.386_294_361_119_890_6;

/// Tolerance for the agreement between the two routes to `C(G)`.
pub const CRITERION_AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("optimal discriminator undefined where both densities vanish (a = b = 0)")]
    BothZero,
    #[error("C(G) routes disagree: expectation form {expectation}, divergence form {divergence}")]
    CriterionMismatch { expectation: f64, divergence: f64 },
    #[error("invalid descent setting: {0}")]
    InvalidDescent(String),
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize, trajectory: Trajectory },
}

/// Maximizer over `y ∈ [0, 1]` of `a log y + b log(1 - y)`.
pub fn y_star(a: f64, b: f64) -> Result<f64, TheoryError> {
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
        return Err(TheoryError::InvalidDensity(format!(
            "weights must be finite and non-negative, got a = {a}, b = {b}"
        )));
    }
    if a == 0.0 && b == 0.0 {
        return Err(TheoryError::BothZero);
    }
    Ok(a / (a + b))
}

/// Per-bin optimal discriminator; `None` where both densities are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorField {
    values: Vec<Option<f64>>,
}

impl DiscriminatorField {
    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, bin: usize) -> Option<f64> {
        self.values[bin]
    }
}

pub fn optimal_discriminator(
    p_data: &GridDensity,
    p_g: &GridDensity,
) -> Result<DiscriminatorField, TheoryError> {
    check_grid(p_data, p_g)?;
    let values = p_data
        .probs()
        .iter()
        .zip(p_g.probs())
        .map(|(&a, &b)| y_star(a, b).ok())
        .collect();
    Ok(DiscriminatorField { values })
}

/// KL divergence, which is infinite when `p` puts mass where `q` has none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kl {
    Finite(f64),
    Infinite,
}

impl Kl {
    pub fn finite(self) -> Option<f64> {
        match self {
            Kl::Finite(v) => Some(v),
            Kl::Infinite => None,
        }
    }
}

pub fn kl(p: &GridDensity, q: &GridDensity) -> Result<Kl, TheoryError> {
    check_grid(p, q)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(Kl::Infinite);
        }
        total += pi * (pi / qi).ln();
    }
    Ok(Kl::Finite(total))
}

/// `½ KL(p ‖ m) + ½ KL(q ‖ m)` with `m = (p + q) / 2`. Always in `[0, log 2]`.
pub fn jsd(p: &GridDensity, q: &GridDensity) -> Result<f64, TheoryError> {
    check_grid(p, q)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        let m = 0.5 * (pi + qi);
        if pi > 0.0 {
            total += 0.5 * pi * (pi / m).ln();
        }
        if qi > 0.0 {
            total += 0.5 * qi * (qi / m).ln();
        }
    }
    // rounding can leave a -1e-17 residue at p = q
    Ok(total.clamp(0.0, std::f64::consts::LN_2))
}

/// `C(G) = max_D V(G, D)`, computed twice: as the expectation of the game
/// value at the optimal discriminator, and as `-log 4 + 2 JSD(p_data ‖ p_g)`.
/// The routes must agree to [`CRITERION_AGREEMENT_TOL`].
pub fn virtual_criterion(p_data: &GridDensity, p_g: &GridDensity) -> Result<f64, TheoryError> {
    let expectation = criterion_expectation(p_data, p_g)?;
    let divergence = NEG_LOG_4 + 2.0 * jsd(p_data, p_g)?;
    if (expectation - divergence).abs() > CRITERION_AGREEMENT_TOL {
        return Err(TheoryError::CriterionMismatch {
            expectation,
            divergence,
        });
    }
    Ok(expectation)
}

/// `E_{p_data}[log D*] + E_{p_g}[log(1 - D*)]`.
fn criterion_expectation(p_data: &GridDensity, p_g: &GridDensity) -> Result<f64, TheoryError> {
    let field = optimal_discriminator(p_data, p_g)?;
    let mut total = 0.0;
    for ((&a, &b), d) in p_data.probs().iter().zip(p_g.probs()).zip(field.values()) {
        let Some(d) = *d else { continue };
        if a > 0.0 {
            total += a * d.ln();
        }
        if b > 0.0 {
            total += b * (1.0 - d).ln();
        }
    }
    Ok(total)
}

fn check_grid(p: &GridDensity, q: &GridDensity) -> Result<(), TheoryError> {
    if p.grid() != q.grid() {
        return Err(TheoryError::GridMismatch);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngState;

    fn grid(n: usize) -> Grid {
        Grid::spanning(0.0, 1.0, n).unwrap()
    }

    fn density(probs: &[f64]) -> GridDensity {
        GridDensity::new(grid(probs.len()), probs.to_vec()).unwrap()
    }

    fn random_density(rng: &mut RngState, n: usize) -> GridDensity {
        let w: Vec<f64> = (0..n).map(|_| rng.next_f64() + 1e-3).collect();
        GridDensity::from_weights(grid(n), &w).unwrap()
    }

    /// Grid-search maximizer of `a log y + b log(1-y)` over `10^6` interior points.
    fn brute_force_y(a: f64, b: f64) -> f64 {
        let n = 1_000_000;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 1..n {
            let y = i as f64 / n as f64;
            let v = a * y.ln() + b * (1.0 - y).ln();
            if v > best.0 {
                best = (v, y);
            }
        }
        best.1
    }

    #[test]
    fn neg_log_4_constant() {
        assert_eq!(NEG_LOG_4, -(4f64.ln()));
    }

    #[test]
    fn y_star_cases() {
        assert_eq!(y_star(0.2, 0.2).unwrap(), 0.5);
        assert!((y_star(0.3, 0.1).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(y_star(0.0, 0.0), Err(TheoryError::BothZero));
        assert!(y_star(-0.1, 0.2).is_err());
        for (a, b) in [(0.3, 0.1), (0.05, 0.9), (1.0, 1.0), (0.7, 0.2)] {
            assert!((y_star(a, b).unwrap() - brute_force_y(a, b)).abs() <= 1e-6);
        }
    }

    #[test]
    fn optimal_discriminator_cases() {
        let p = density(&[0.25, 0.25, 0.5, 0.0]);
        let d = optimal_discriminator(&p, &p).unwrap();
        assert_eq!(&d.values()[..3], &[Some(0.5); 3]);
        assert_eq!(d.get(3), None);

        let q = density(&[0.5, 0.0, 0.25, 0.25]);
        let d = optimal_discriminator(&p, &q).unwrap();
        assert_eq!(d.get(1), Some(1.0));
        assert_eq!(d.get(3), Some(0.0));

        let mut rng = RngState::new(4);
        let a = random_density(&mut rng, 6);
        let b = random_density(&mut rng, 6);
        let d = optimal_discriminator(&a, &b).unwrap();
        for i in 0..6 {
            let oracle = brute_force_y(a.probs()[i], b.probs()[i]);
            assert!((d.get(i).unwrap() - oracle).abs() <= 1e-6);
        }

        let other = GridDensity::uniform(Grid::spanning(0.0, 2.0, 4).unwrap());
        assert_eq!(optimal_discriminator(&p, &other), Err(TheoryError::GridMismatch));
    }

    #[test]
    fn kl_cases() {
        let p = density(&[0.5, 0.5]);
        let q = density(&[0.25, 0.75]);
        assert_eq!(kl(&p, &p).unwrap(), Kl::Finite(0.0));
        // 0.5 ln 2 + 0.5 ln(2/3)
        let oracle = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let got = kl(&p, &q).unwrap().finite().unwrap();
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.143_841_036_225_890_2).abs() < 1e-12);

        let r = density(&[1.0, 0.0]);
        assert_eq!(kl(&p, &r).unwrap(), Kl::Infinite);
        // zero mass in p is fine
        assert!(kl(&r, &p).unwrap().finite().is_some());
    }

    #[test]
    fn jsd_cases() {
        let mut rng = RngState::new(8);
        let p = random_density(&mut rng, 10);
        let q = random_density(&mut rng, 10);
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_eq!(jsd(&p, &q).unwrap(), jsd(&q, &p).unwrap());
        let a = density(&[0.5, 0.5, 0.0, 0.0]);
        let b = density(&[0.0, 0.0, 0.3, 0.7]);
        assert!((jsd(&a, &b).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn jsd_bounds_on_random_pairs() {
        let mut rng = RngState::new(81);
        for _ in 0..200 {
            let p = random_density(&mut rng, 12);
            let q = random_density(&mut rng, 12);
            let v = jsd(&p, &q).unwrap();
            assert!((0.0..=std::f64::consts::LN_2).contains(&v));
        }
    }

    #[test]
    fn virtual_criterion_cases() {
        let p = density(&[0.1, 0.2, 0.3, 0.4]);
        assert!((virtual_criterion(&p, &p).unwrap() - NEG_LOG_4).abs() < 1e-12);
        let a = density(&[0.5, 0.5, 0.0, 0.0]);
        let b = density(&[0.0, 0.0, 0.3, 0.7]);
        assert!(virtual_criterion(&a, &b).unwrap().abs() < 1e-12);

        let mut rng = RngState::new(100);
        for _ in 0..100 {
            let p = random_density(&mut rng, 16);
            let q = random_density(&mut rng, 16);
            assert!(virtual_criterion(&p, &q).unwrap() > NEG_LOG_4 + 1e-9);
        }
    }
}

use std::io::{self, BufRead, Write};

use super::{jsd, virtual_criterion, GridDensity, TheoryError};

/// Halvings tried before a step is declared stationary.
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentRecord {
    pub step: usize,
    pub criterion: f64,
    pub jsd: f64,
    /// Step size actually accepted (0 when no halving produced a decrease).
    pub lr_used: f64,
    pub p_g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub records: Vec<DescentRecord>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&DescentRecord> {
        self.records.last()
    }

    /// `step,criterion,jsd` rows with shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,criterion,jsd")?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.step, r.criterion, r.jsd)?;
        }
        Ok(())
    }
}

/// Reads back `(step, criterion, jsd)` rows written by [`Trajectory::write_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R) -> io::Result<Vec<(usize, f64, f64)>> {
    let bad = |line: usize, msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "step,criterion,jsd" {
                return Err(bad(1, "unexpected header"));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(i + 1, "expected 3 fields"));
        }
        let step = fields[0].parse().map_err(|_| bad(i + 1, "bad step"))?;
        let c = fields[1].parse().map_err(|_| bad(i + 1, "bad criterion"))?;
        let j = fields[2].parse().map_err(|_| bad(i + 1, "bad jsd"))?;
        rows.push((step, c, j));
    }
    Ok(rows)
}

/// Minimizes `C(G)` over `p_g` directly in density space.
///
/// `p_g` is the softmax of per-bin logits. With the discriminator held at its
/// optimum, `∂C/∂p_g[i] = log(1 - D*[i]) = log(p_g[i] / (p_data[i] + p_g[i]))`.
/// That is pulled back through the softmax and the logits take a gradient
/// step. The step starts at `lr` each iteration and is halved until `C`
/// does not increase, so the recorded criterion is non-increasing.
///
/// The returned trajectory has `steps + 1` records, the first being the start.
pub fn density_descent(
    p_data: &GridDensity,
    p_g0: &GridDensity,
    steps: usize,
    lr: f64,
) -> Result<Trajectory, TheoryError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(TheoryError::InvalidDescent(format!("learning rate {lr} must be > 0")));
    }
    if p_data.grid() != p_g0.grid() {
        return Err(TheoryError::GridMismatch);
    }
    if p_g0.probs().iter().any(|&p| p <= 0.0) {
        return Err(TheoryError::InvalidDescent(
            "starting density must be strictly positive".into(),
        ));
    }
    let grid = *p_g0.grid();
    let mut logits: Vec<f64> = p_g0.probs().iter().map(|p| p.ln()).collect();
    let mut current = p_g0.clone();
    let mut criterion = virtual_criterion(p_data, &current)?;
    let mut trajectory = Trajectory {
        records: vec![DescentRecord {
            step: 0,
            criterion,
            jsd: jsd(p_data, &current)?,
            lr_used: 0.0,
            p_g: current.probs().to_vec(),
        }],
    };

    for step in 1..=steps {
        let grad = logit_gradient(p_data, &current);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(TheoryError::NonFiniteGradient { step, trajectory });
        }
        let mut accepted = None;
        if grad.iter().any(|&g| g != 0.0) {
            let mut eta = lr;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = logits.iter().zip(&grad).map(|(l, g)| l - eta * g).collect();
                let candidate = GridDensity::from_logits(grid, &trial)?;
                // a bin underflowing to zero would leave the softmax chart
                if candidate.probs().iter().all(|&p| p > 0.0) {
                    let c = virtual_criterion(p_data, &candidate)?;
                    if c <= criterion {
                        accepted = Some((trial, candidate, c, eta));
                        break;
                    }
                }
                eta *= 0.5;
            }
        }
        let lr_used = match accepted {
            Some((trial, candidate, c, eta)) => {
                logits = trial;
                current = candidate;
                criterion = c;
                eta
            }
            None => 0.0,
        };
        trajectory.records.push(DescentRecord {
            step,
            criterion,
            jsd: jsd(p_data, &current)?,
            lr_used,
            p_g: current.probs().to_vec(),
        });
    }
    Ok(trajectory)
}

/// `∂C/∂θ_j = p_j (g_j - Σ_i p_i g_i)` with `g_i = log(p_g[i] / (p_data[i] + p_g[i]))`.
fn logit_gradient(p_data: &GridDensity, p_g: &GridDensity) -> Vec<f64> {
    let g: Vec<f64> = p_data
        .probs()
        .iter()
        .zip(p_g.probs())
        .map(|(&a, &b)| (b / (a + b)).ln())
        .collect();
    let mean: f64 = p_g.probs().iter().zip(&g).map(|(p, g)| p * g).sum();
    p_g.probs().iter().zip(&g).map(|(p, gi)| p * (gi - mean)).collect()
}

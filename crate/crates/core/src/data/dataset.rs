use super::DataError;
use crate::numkit::{Matrix, RngState};

/// Immutable point set with optional labels and a note on where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Matrix,
    pub labels: Option<Vec<u8>>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(points: Matrix, provenance: impl Into<String>) -> Self {
        Dataset {
            points,
            labels: None,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn subset(&self, indices: &[usize], note: &str) -> Dataset {
        Dataset {
            points: self.points.select_rows(indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            provenance: format!("{} [{note}]", self.provenance),
        }
    }
}

/// Shuffles with `seed` and cuts into train / validation / test parts of
/// `round(f · n)` rows each. The test part takes whatever is left.
pub fn split(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DataError> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(DataError::InvalidSplit(format!(
            "fractions must be positive, got {fractions:?}"
        )));
    }
    if (ft + fv + fs - 1.0).abs() > 1e-6 {
        return Err(DataError::InvalidSplit(format!(
            "fractions sum to {}, not 1",
            ft + fv + fs
        )));
    }
    let n = dataset.len();
    let n_train = ((ft * n as f64).round() as usize).min(n);
    let n_valid = ((fv * n as f64).round() as usize).min(n - n_train);
    let mut order: Vec<usize> = (0..n).collect();
    RngState::new(seed).shuffle(&mut order);
    let (train, rest) = order.split_at(n_train);
    let (valid, test) = rest.split_at(n_valid);
    Ok((
        dataset.subset(train, "train"),
        dataset.subset(valid, "valid"),
        dataset.subset(test, "test"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indexed(n: usize) -> Dataset {
        let points = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut d = Dataset::new(points, "synthetic");
        d.labels = Some((0..n).map(|i| (i % 10) as u8).collect());
        d
    }

    fn ids(d: &Dataset) -> Vec<usize> {
        d.points.as_slice().iter().map(|&v| v as usize).collect()
    }

    #[test]
    fn partition_contract() {
        let data = indexed(101);
        let (a, b, c) = split(&data, (0.7, 0.2, 0.1), 3).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (71, 20, 10));
        let mut all: Vec<usize> = ids(&a).into_iter().chain(ids(&b)).chain(ids(&c)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        // labels travel with their rows
        for (p, l) in ids(&a).iter().zip(a.labels.as_ref().unwrap()) {
            assert_eq!((p % 10) as u8, *l);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let data = indexed(50);
        assert_eq!(split(&data, (0.5, 0.25, 0.25), 9).unwrap(), split(&data, (0.5, 0.25, 0.25), 9).unwrap());
        let perms: Vec<Vec<usize>> = (0..5)
            .map(|s| ids(&split(&data, (0.5, 0.25, 0.25), s).unwrap().0))
            .collect();
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(perms[i], perms[j]);
            }
        }
    }

    #[test]
    fn invalid_fractions_rejected() {
        let data = indexed(10);
        assert!(split(&data, (0.5, 0.5, 0.0), 0).is_err());
        assert!(split(&data, (0.5, 0.3, 0.3), 0).is_err());
        assert!(split(&data, (f64::NAN, 0.5, 0.5), 0).is_err());
    }
}

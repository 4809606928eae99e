use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rng::{streams, Prng};
use crate::error::{Error, Result};

/// Row-major classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    n_classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(n_features: usize, n_classes: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        if n_features == 0 || n_classes == 0 {
            return Err(Error::invalid("n_features and n_classes must be positive"));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_features,
                got: features.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            n_features,
            n_classes,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &i in indices {
            h[self.labels[i]] += 1;
        }
        h
    }

    /// New dataset containing the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(self.n_features, self.n_classes, features, labels)
    }

    /// Seeded shuffle, then the last `eval_fraction` of rows become the
    /// evaluation split.
    pub fn split(&self, eval_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&eval_fraction) || eval_fraction == 0.0 {
            return Err(Error::invalid("eval_fraction must lie in (0, 1)"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        Prng::from_seed(seed, streams::DATA).shuffle(&mut idx);
        let n_eval = ((self.len() as f64) * eval_fraction).round() as usize;
        let n_eval = n_eval.clamp(1, self.len() - 1);
        let (train, eval) = idx.split_at(self.len() - n_eval);
        Ok((self.subset(train)?, self.subset(eval)?))
    }
}

/// Gaussian-blob generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    /// Standard deviation of each blob around its centre. Centres are drawn
    /// from `N(0, I)`.
    pub cluster_spread: f64,
    pub seed: u64,
}

/// Balanced Gaussian blobs: sample `i` has label `i % n_classes`.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n_samples == 0 || spec.n_features == 0 || spec.n_classes == 0 {
        return Err(Error::invalid("synthetic dataset counts must be positive"));
    }
    if spec.cluster_spread < 0.0 {
        return Err(Error::invalid("cluster_spread must be non-negative"));
    }
    let mut rng = Prng::from_seed(spec.seed, streams::DATA);
    let centres: Vec<f64> = (0..spec.n_classes * spec.n_features)
        .map(|_| rng.gaussian(1.0))
        .collect();
    let mut features = Vec::with_capacity(spec.n_samples * spec.n_features);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let c = i % spec.n_classes;
        let centre = &centres[c * spec.n_features..(c + 1) * spec.n_features];
        for &mu in centre {
            let jitter = if spec.cluster_spread > 0.0 {
                rng.gaussian(spec.cluster_spread)
            } else {
                0.0
            };
            features.push(mu + jitter);
        }
        labels.push(c);
    }
    Dataset::new(spec.n_features, spec.n_classes, features, labels)
}

/// Reads comma-separated numeric features with an integer label in the last
/// column. `n_classes` is one more than the largest label seen.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut n_features: Option<usize> = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if (has_header && i == 0) || raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(parse_err(line_no, "expected at least one feature and a label".into()));
        }
        let nf = cells.len() - 1;
        match n_features {
            None => n_features = Some(nf),
            Some(expected) if expected != nf => {
                return Err(parse_err(
                    line_no,
                    format!("expected {expected} feature columns, found {nf}"),
                ))
            }
            Some(_) => {}
        }
        for cell in &cells[..nf] {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid number `{cell}`")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite value `{cell}`")));
            }
            features.push(v);
        }
        let label_cell = cells[nf];
        let label: usize = label_cell
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid label `{label_cell}`")))?;
        labels.push(label);
    }
    let n_features = n_features.ok_or_else(|| parse_err(0, "no data rows".into()))?;
    let n_classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(n_features, n_classes, features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            n_samples: 101,
            n_features: 4,
            n_classes: 3,
            cluster_spread: 0.5,
            seed: 17,
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(make_synthetic(&spec()).unwrap(), make_synthetic(&spec()).unwrap());
    }

    #[test]
    fn synthetic_is_balanced() {
        let d = make_synthetic(&spec()).unwrap();
        let all: Vec<usize> = (0..d.len()).collect();
        assert_eq!(d.label_histogram(&all), vec![34, 34, 33]);
    }

    #[test]
    fn split_partitions_rows() {
        let d = make_synthetic(&spec()).unwrap();
        let (tr, ev) = d.split(0.2, 3).unwrap();
        assert_eq!(tr.len() + ev.len(), d.len());
        assert_eq!(ev.len(), 20);
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b,label\n1.0,2.0,0\n-1.5,3,2\n").unwrap();
        let d = load_csv(f.path(), true).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.n_classes(), 3);
        assert_eq!(d.row(1), &[-1.5, 3.0]);
        assert_eq!(d.labels(), &[0, 2]);

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "1.0,2.0,0\n1.0,oops,1").unwrap();
        match load_csv(g.path(), false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let mut h = tempfile::NamedTempFile::new().unwrap();
        writeln!(h, "1.0,2.0,0\n1.0,1").unwrap();
        assert!(matches!(load_csv(h.path(), false), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(Dataset::new(1, 2, vec![0.0], vec![2]).is_err());
        assert!(Dataset::new(1, 2, vec![], vec![]).is_err());
    }
}

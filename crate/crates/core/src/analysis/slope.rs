use crate::error::{Error, Result};

/// Least-squares slope of `ln(curve[i])` against `ln(i + 1)` over indices
/// `i ≥ burn_in`. `curve[i]` is the optimality gap after round `i + 1`.
pub fn convergence_slope(curve: &[f64], burn_in: usize) -> Result<f64> {
    if curve.len() < burn_in + 2 {
        return Err(Error::invalid("convergence_slope needs two points after burn-in"));
    }
    let pts: Vec<(f64, f64)> = curve[burn_in..]
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            if g > 0.0 && g.is_finite() {
                Ok((((burn_in + j + 1) as f64).ln(), g.ln()))
            } else {
                Err(Error::invalid(format!(
                    "gap at round {} is not positive",
                    burn_in + j + 1
                )))
            }
        })
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_laws() {
        let c: Vec<f64> = (1..=500).map(|t| 3.0 / t as f64).collect();
        assert!((convergence_slope(&c, 49).unwrap() + 1.0).abs() < 1e-6);
        let c: Vec<f64> = (1..=500).map(|t| 0.2 / (t as f64).sqrt()).collect();
        assert!((convergence_slope(&c, 0).unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(convergence_slope(&[1.0, 0.5], 1).is_err());
        assert!(convergence_slope(&[1.0, 0.0, 0.3], 0).is_err());
    }
}

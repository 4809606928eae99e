use crate::compressors::decode;
use crate::error::{ensure_same_len, Error, Result};
use crate::numeric::{NoiseSpec, ParamVector};

use super::local::{ClientReport, Uplink};

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Decodes one uplink into a dense update.
pub fn decode_uplink(uplink: &Uplink, noise: Option<&NoiseSpec>) -> Result<ParamVector> {
    match uplink {
        Uplink::Dense(u) => Ok(u.clone()),
        Uplink::Compressed(p) => decode(p, noise),
    }
}

/// `global + Σ_k w_k · decode(report_k)`, summed in ascending client id.
///
/// `weights[i]` belongs to `reports[i]` and the weights must sum to one.
pub fn aggregate(
    global: &[f64],
    reports: &[ClientReport],
    weights: &[f64],
    noise: Option<&NoiseSpec>,
) -> Result<ParamVector> {
    ensure_same_len(reports.len(), weights.len())?;
    if reports.is_empty() {
        return Err(Error::invalid("nothing to aggregate"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE || weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::invalid(format!(
            "aggregation weights sum to {total}, expected 1"
        )));
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by_key(|&i| reports[i].client_id);
    if order
        .windows(2)
        .any(|w| reports[w[0]].client_id == reports[w[1]].client_id)
    {
        return Err(Error::invalid("duplicate client report"));
    }
    let mut sum = ParamVector::zeros(global.len());
    for i in order {
        ensure_same_len(global.len(), reports[i].uplink.dim())?;
        let update = decode_uplink(&reports[i].uplink, noise)?;
        sum.axpy(weights[i], &update)?;
    }
    sum.add(global)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(id: usize, u: Vec<f64>) -> ClientReport {
        ClientReport {
            client_id: id,
            n_samples: 1,
            uplink: Uplink::Dense(u.into()),
            local_losses: vec![],
        }
    }

    #[test]
    fn weighted_mean() {
        let r = [dense(0, vec![0.01, 0.0]), dense(1, vec![0.0, -0.01])];
        let w = aggregate(&[0.0, 0.0], &r, &[0.5, 0.5], None).unwrap();
        assert_eq!(w.as_slice(), &[0.005, -0.005]);
    }

    #[test]
    fn single_client() {
        let r = [dense(3, vec![0.25, -1.0])];
        assert_eq!(
            aggregate(&[1.0, 1.0], &r, &[1.0], None).unwrap().as_slice(),
            &[1.25, 0.0]
        );
    }

    #[test]
    fn bad_weights() {
        let r = [dense(0, vec![1.0]), dense(1, vec![1.0])];
        assert!(aggregate(&[0.0], &r, &[0.5, 0.6], None).is_err());
        assert!(aggregate(&[0.0], &r, &[1.0], None).is_err());
        let dup = [dense(0, vec![1.0]), dense(0, vec![1.0])];
        assert!(aggregate(&[0.0], &dup, &[0.5, 0.5], None).is_err());
        assert!(aggregate(&[0.0, 0.0], &r, &[0.5, 0.5], None).is_err());
    }

    #[test]
    fn order_invariant() {
        let a = [
            dense(2, vec![0.1, 0.7]),
            dense(0, vec![0.3, 0.2]),
            dense(5, vec![-0.9, 0.4]),
        ];
        let wa = [0.2, 0.3, 0.5];
        let b = [a[1].clone(), a[2].clone(), a[0].clone()];
        let wb = [0.3, 0.5, 0.2];
        let x = aggregate(&[0.0, 1.0], &a, &wa, None).unwrap();
        let y = aggregate(&[0.0, 1.0], &b, &wb, None).unwrap();
        assert_eq!(
            x.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

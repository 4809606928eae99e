use std::io::{BufRead, BufReader, Read, Write};

use crate::compressors::CodecId;
use crate::error::{Error, Result};
use crate::federation::RoundMetrics;

/// Column order of every metrics file.
pub const METRICS_HEADER: &str = "round,codec,train_loss,eval_loss,eval_accuracy,uplink_bytes,elapsed_ms";

/// Writes the header on creation and one row per round, flushing after
/// each row so an interrupted run keeps what it finished.
pub struct MetricsWriter<W: Write> {
    out: W,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{METRICS_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn emit(&mut self, m: &RoundMetrics) -> Result<()> {
        // `{}` on f64 prints the shortest text that parses back to the same value
        writeln!(
            self.out,
            "{},{},{},{},{},{},{}",
            m.round, m.codec, m.train_loss, m.eval_loss, m.eval_accuracy, m.uplink_bytes, m.elapsed_ms
        )?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: Option<&str>) -> Result<T> {
    raw.and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Decode(format!("metrics line {line}: bad or missing `{name}`")))
}

/// Parses a metrics file back into rows.
pub fn read_metrics(input: impl Read) -> Result<Vec<RoundMetrics>> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(METRICS_HEADER) {
        return Err(Error::Decode("metrics file has no header".into()));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        let mut parts = line.split(',');
        let round = field(n, "round", parts.next())?;
        let codec: CodecId = field(n, "codec", parts.next())?;
        let row = RoundMetrics {
            round,
            codec,
            train_loss: field(n, "train_loss", parts.next())?,
            eval_loss: field(n, "eval_loss", parts.next())?,
            eval_accuracy: field(n, "eval_accuracy", parts.next())?,
            uplink_bytes: field(n, "uplink_bytes", parts.next())?,
            elapsed_ms: field(n, "elapsed_ms", parts.next())?,
        };
        if parts.next().is_some() {
            return Err(Error::Decode(format!("metrics line {n}: too many fields")));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One line of the comparison summary.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub codec: CodecId,
    pub lr: f64,
    /// Mean evaluation accuracy over the last (up to) five rounds.
    pub final_accuracy: f64,
    pub final_eval_loss: f64,
    pub total_uplink_bytes: u64,
}

pub const SUMMARY_HEADER: &str = "codec,lr,final_accuracy,final_eval_loss,total_uplink_bytes";

impl SummaryRow {
    pub fn from_metrics(codec: CodecId, lr: f64, metrics: &[RoundMetrics]) -> Self {
        let tail = &metrics[metrics.len().saturating_sub(5)..];
        let n = tail.len().max(1) as f64;
        Self {
            codec,
            lr,
            final_accuracy: tail.iter().map(|m| m.eval_accuracy).sum::<f64>() / n,
            final_eval_loss: tail.iter().map(|m| m.eval_loss).sum::<f64>() / n,
            total_uplink_bytes: metrics.iter().map(|m| m.uplink_bytes).sum(),
        }
    }
}

pub fn write_summary(mut out: impl Write, rows: &[SummaryRow]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.codec, r.lr, r.final_accuracy, r.final_eval_loss, r.total_uplink_bytes
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(round: usize, acc: f64) -> RoundMetrics {
        RoundMetrics {
            round,
            codec: CodecId::MrnSigned,
            train_loss: 0.1 / round as f64,
            eval_loss: 1.0 / 3.0,
            eval_accuracy: acc,
            uplink_bytes: 1234,
            elapsed_ms: 0,
        }
    }

    #[test]
    fn header_and_rows() {
        let mut w = MetricsWriter::new(Vec::new()).unwrap();
        w.emit(&row(1, 0.5)).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(METRICS_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_metrics("nope\n".as_bytes()).is_err());
        let bad = format!("{METRICS_HEADER}\n1,none,0.1\n");
        assert!(read_metrics(bad.as_bytes()).is_err());
    }

    #[test]
    fn summary_uses_trailing_five() {
        let rows: Vec<_> = (1..=10).map(|r| row(r, r as f64 / 10.0)).collect();
        let s = SummaryRow::from_metrics(CodecId::MrnSigned, 0.1, &rows);
        assert!((s.final_accuracy - 0.8).abs() < 1e-12);
        assert_eq!(s.total_uplink_bytes, 12340);
    }

    proptest! {
        #[test]
        fn metrics_round_trip(
            vals in proptest::collection::vec((any::<f64>(), any::<f64>(), 0.0f64..=1.0, any::<u64>(), any::<u64>()), 0..20),
            codec in 0u8..7,
        ) {
            let codec = CodecId::from_byte(codec).unwrap();
            let rows: Vec<RoundMetrics> = vals
                .into_iter()
                .enumerate()
                .filter(|(_, v)| v.0.is_finite() && v.1.is_finite())
                .map(|(i, (tl, el, acc, bytes, ms))| RoundMetrics {
                    round: i + 1,
                    codec,
                    train_loss: tl,
                    eval_loss: el,
                    eval_accuracy: acc,
                    uplink_bytes: bytes,
                    elapsed_ms: ms,
                })
                .collect();
            let mut w = MetricsWriter::new(Vec::new()).unwrap();
            for r in &rows {
                w.emit(r).unwrap();
            }
            let back = read_metrics(w.into_inner().as_slice()).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}

//! CSV record types shared by the pipeline commands.
//!
//! All floats are written with Rust's shortest round-trip formatting, so a
//! parse-write cycle reproduces files byte-exactly.

use anyhow::{bail, Context, Result};
use qcmol::svm::PerformanceLabel;

/// Row of a descriptor table produced by `describe`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescribeRecord {
    pub id: usize,
    /// "ok" or a flag such as "unmappable_delta"; flagged rows carry no
    /// descriptor values.
    pub status: String,
    pub atoms: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub pc1: Option<f64>,
    pub pc2: Option<f64>,
}

impl DescribeRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub const DESCRIBE_HEADER: &str = "id,status,atoms,r_min,r_max,pc1,pc2";

fn opt_to_string<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(field: &str, what: &str) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| anyhow::anyhow!("cannot parse {what} from {field:?}"))
}

pub fn write_described(records: &[DescribeRecord]) -> String {
    let mut out = String::from(DESCRIBE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.id,
            r.status,
            opt_to_string(&r.atoms),
            opt_to_string(&r.r_min),
            opt_to_string(&r.r_max),
            opt_to_string(&r.pc1),
            opt_to_string(&r.pc2),
        ));
    }
    out
}

pub fn parse_described(text: &str) -> Result<Vec<DescribeRecord>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty descriptor file")?;
    if header != DESCRIBE_HEADER {
        bail!("unexpected descriptor header {header:?}");
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            bail!("descriptor line {} has {} fields", lineno + 2, fields.len());
        }
        records.push(DescribeRecord {
            id: fields[0]
                .parse()
                .with_context(|| format!("bad id on line {}", lineno + 2))?,
            status: fields[1].to_string(),
            atoms: parse_opt(fields[2], "atom count")?,
            r_min: parse_opt(fields[3], "r_min")?,
            r_max: parse_opt(fields[4], "r_max")?,
            pc1: parse_opt(fields[5], "pc1")?,
            pc2: parse_opt(fields[6], "pc2")?,
        });
    }
    Ok(records)
}

/// Row of an evaluation table produced by `evaluate`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub id: usize,
    pub n_rz: usize,
    /// Best validation-fold accuracy found by the parameter search.
    pub val_accuracy: f64,
    /// Balanced accuracy of the final model on the held-out test set.
    pub test_accuracy: f64,
    pub label: PerformanceLabel,
    /// Optimized parameters, in grid scan order.
    pub theta: Vec<f64>,
}

pub const EVALUATION_HEADER: &str = "id,n_rz,val_accuracy,test_accuracy,label,theta";

pub fn write_evaluated(records: &[EvaluationRecord]) -> String {
    let mut out = String::from(EVALUATION_HEADER);
    out.push('\n');
    for r in records {
        let theta: Vec<String> = r.theta.iter().map(|t| t.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.id,
            r.n_rz,
            r.val_accuracy,
            r.test_accuracy,
            r.label.as_str(),
            theta.join(";"),
        ));
    }
    out
}

pub fn parse_evaluated(text: &str) -> Result<Vec<EvaluationRecord>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty evaluation file")?;
    if header != EVALUATION_HEADER {
        bail!("unexpected evaluation header {header:?}");
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("evaluation line {} has {} fields", lineno + 2, fields.len());
        }
        let theta = if fields[5].is_empty() {
            Vec::new()
        } else {
            fields[5]
                .split(';')
                .map(|t| {
                    t.parse()
                        .map_err(|_| anyhow::anyhow!("bad theta entry {t:?}"))
                })
                .collect::<Result<Vec<f64>>>()?
        };
        records.push(EvaluationRecord {
            id: fields[0].parse().context("bad id")?,
            n_rz: fields[1].parse().context("bad n_rz")?,
            val_accuracy: fields[2].parse().context("bad val_accuracy")?,
            test_accuracy: fields[3].parse().context("bad test_accuracy")?,
            label: PerformanceLabel::parse(fields[4])
                .map_err(|e| anyhow::anyhow!(e.to_string()))?,
            theta,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn described_roundtrip_is_byte_exact() {
        let records = vec![
            DescribeRecord {
                id: 0,
                status: "ok".into(),
                atoms: Some(33),
                r_min: Some(12.345678901234),
                r_max: Some(45.0),
                pc1: Some(-0.25),
                pc2: Some(1e-12),
            },
            DescribeRecord {
                id: 1,
                status: "unmappable_delta".into(),
                atoms: None,
                r_min: None,
                r_max: None,
                pc1: None,
                pc2: None,
            },
        ];
        let text = write_described(&records);
        let back = parse_described(&text).unwrap();
        assert_eq!(records, back);
        assert_eq!(text, write_described(&back));
    }

    #[test]
    fn evaluated_roundtrip_is_byte_exact() {
        let records = vec![
            EvaluationRecord {
                id: 3,
                n_rz: 7,
                val_accuracy: 0.8125,
                test_accuracy: 0.7653333333333333,
                label: PerformanceLabel::Performant,
                theta: vec![0.1, 2.5066282746310002, 6.0],
            },
            EvaluationRecord {
                id: 4,
                n_rz: 0,
                val_accuracy: 0.5,
                test_accuracy: 0.5,
                label: PerformanceLabel::Discarded,
                theta: vec![],
            },
        ];
        let text = write_evaluated(&records);
        let back = parse_evaluated(&text).unwrap();
        assert_eq!(records, back);
        assert_eq!(text, write_evaluated(&back));
    }

    #[test]
    fn malformed_headers_are_rejected() {
        assert!(parse_described("nope\n").is_err());
        assert!(parse_evaluated("nope\n").is_err());
    }
}

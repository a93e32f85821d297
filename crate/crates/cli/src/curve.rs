//! CSV curves for plotting.

use std::fmt::Write;

use crate::config::Command;
use crate::error::CliError;
use crate::report::Report;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    pub method: String,
    pub seed: u64,
    /// Paired theoretical value (tail experiments).
    pub theoretical: Option<f64>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Flattens the reports (expanding suites) into one CSV sorted by `x`.
///
/// Columns are `x,value,method,seed`, plus `theoretical` for tail
/// experiments. All reports must come from the same command.
pub fn emit_curve(reports: &[Report]) -> Result<String, CliError> {
    let mut flat: Vec<&Report> = Vec::new();
    for r in reports {
        if r.command == Command::Suite {
            flat.extend(r.runs.iter());
        } else {
            flat.push(r);
        }
    }
    let first = flat
        .first()
        .ok_or_else(|| CliError::Config("no reports to emit".into()))?
        .command;
    if let Some(other) = flat.iter().find(|r| r.command != first) {
        return Err(CliError::MixedReports(first.name(), other.command.name()));
    }
    let mut points: Vec<&CurvePoint> = flat.iter().flat_map(|r| r.curve.iter()).collect();
    points.sort_by(|a, b| a.x.total_cmp(&b.x));

    let tail = first == Command::Tail;
    let mut out = String::from("x,value,method,seed");
    if tail {
        out.push_str(",theoretical");
    }
    out.push('\n');
    for p in points {
        write!(out, "{},{},{},{}", num(p.x), num(p.value), p.method, p.seed).unwrap();
        if tail {
            write!(out, ",{}", num(p.theoretical.unwrap_or(f64::NAN))).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn report(command: Command, xs: &[f64]) -> Report {
        let config = ExperimentConfig::from_json(&format!(r#"{{"command":"{}"}}"#, command.name())).unwrap();
        Report {
            config_hash: String::new(),
            seed: None,
            command,
            config,
            results: Vec::new(),
            violations: Vec::new(),
            wall_ms: 0,
            curve: xs
                .iter()
                .map(|x| CurvePoint {
                    x: *x,
                    value: 2.0 * x,
                    method: "exact_minimal".into(),
                    seed: 0,
                    theoretical: Some(1.0),
                })
                .collect(),
            runs: Vec::new(),
        }
    }

    #[test]
    fn single_report_single_row() {
        let csv = emit_curve(&[report(Command::Rademacher, &[3.0])]).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x,value,method,seed");
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "3.0000000000000000e0,6.0000000000000000e0,exact_minimal,0");
    }

    #[test]
    fn rows_sorted_and_tail_has_theoretical() {
        let csv = emit_curve(&[report(Command::Tail, &[0.5, 0.1, 0.25])]).unwrap();
        let xs: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(xs, vec![0.1, 0.25, 0.5]);
        assert!(csv.starts_with("x,value,method,seed,theoretical\n"));
    }

    #[test]
    fn seventeen_significant_digits_round_trip() {
        let v = 0.1 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
        assert_eq!(num(v).split('e').next().unwrap().replace('.', "").len(), 17);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let err = emit_curve(&[report(Command::Tail, &[1.0]), report(Command::Dudley, &[1.0])]);
        assert!(matches!(err, Err(CliError::MixedReports(..))));
    }
}

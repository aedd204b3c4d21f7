//! Plot-ready exports of aggregated regret curves: a flat CSV and a
//! self-describing JSON with one series per (algorithm, d).

use serde_json::json;

use crate::error::{HarnessError, Result};
use crate::experiment::{aggregate_csv_text, AggregateResult, AggregateRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Json,
}

impl PlotFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(PlotFormat::Csv),
            "json" => Ok(PlotFormat::Json),
            other => Err(HarnessError::config(format!(
                "unknown plot format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// Renders the aggregate in the requested format. The CSV is identical to
/// the on-disk `aggregate.csv` (and parses back with [`parse_plot_csv`]);
/// the JSON groups checkpoints into one series per curve and carries its
/// own column documentation.
pub fn emit_plot_data(agg: &AggregateResult, format: PlotFormat) -> String {
    match format {
        PlotFormat::Csv => aggregate_csv_text(agg),
        PlotFormat::Json => {
            let mut series = Vec::new();
            for row in &agg.rows {
                let key = (row.algorithm.clone(), row.d);
                if series.last().map(|(k, _)| k != &key).unwrap_or(true) {
                    series.push((key, Vec::new()));
                }
                series.last_mut().expect("just pushed").1.push(row);
            }
            let series_json: Vec<_> = series
                .iter()
                .map(|((algorithm, d), rows)| {
                    json!({
                        "algorithm": algorithm,
                        "d": d,
                        "points": rows.iter().map(|r| json!({
                            "t": r.t,
                            "mean_regret": r.mean_regret,
                            "std_regret": r.std_regret,
                            "n_runs": r.n_runs,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = json!({
                "description": "Cumulative-regret curves aggregated over repetitions. \
                                Each series is one (algorithm, dimension) pair; points \
                                give the mean and sample standard deviation of \
                                cumulative regret at checkpoint t over n_runs runs.",
                "fields": {
                    "t": "round index (1-based) at which regret was recorded",
                    "mean_regret": "mean cumulative pseudo-regret over the runs",
                    "std_regret": "sample standard deviation (0 for a single run)",
                    "n_runs": "number of repetitions aggregated",
                },
                "series": series_json,
            });
            let mut text =
                serde_json::to_string_pretty(&doc).expect("plot JSON serialization");
            text.push('\n');
            text
        }
    }
}

/// Parses plot CSV back into an aggregate; exact inverse of the CSV emitter
/// because floats print in shortest round-trip form.
pub fn parse_plot_csv(text: &str) -> Result<AggregateResult> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "algorithm,d,t,mean_regret,std_regret,n_runs" {
                return Err(HarnessError::config(format!(
                    "unexpected plot CSV header {line:?}"
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(HarnessError::config(format!(
                "plot CSV line {} has {} fields, expected 6",
                i + 1,
                fields.len()
            )));
        }
        let parse_err =
            |what: &str| HarnessError::config(format!("plot CSV line {}: bad {what}", i + 1));
        rows.push(AggregateRow {
            algorithm: fields[0].to_owned(),
            d: fields[1].parse().map_err(|_| parse_err("d"))?,
            t: fields[2].parse().map_err(|_| parse_err("t"))?,
            mean_regret: fields[3].parse().map_err(|_| parse_err("mean_regret"))?,
            std_regret: fields[4].parse().map_err(|_| parse_err("std_regret"))?,
            n_runs: fields[5].parse().map_err(|_| parse_err("n_runs"))?,
        });
    }
    Ok(AggregateResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AggregateResult {
        AggregateResult {
            rows: vec![
                AggregateRow {
                    algorithm: "crtm-style-ucb".into(),
                    d: 10,
                    t: 50,
                    mean_regret: 1.25,
                    std_regret: 0.5,
                    n_runs: 4,
                },
                AggregateRow {
                    algorithm: "crtm-style-ucb".into(),
                    d: 10,
                    t: 100,
                    mean_regret: 0.1 + 0.2, // deliberately non-representable
                    std_regret: std::f64::consts::FRAC_1_SQRT_2,
                    n_runs: 4,
                },
                AggregateRow {
                    algorithm: "medpe".into(),
                    d: 20,
                    t: 50,
                    mean_regret: 3.0,
                    std_regret: 0.0,
                    n_runs: 1,
                },
            ],
        }
    }

    #[test]
    fn empty_aggregate_emits_header_only() {
        let text = emit_plot_data(&AggregateResult { rows: vec![] }, PlotFormat::Csv);
        assert_eq!(text, "algorithm,d,t,mean_regret,std_regret,n_runs\n");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let agg = sample();
        let text = emit_plot_data(&agg, PlotFormat::Csv);
        let back = parse_plot_csv(&text).unwrap();
        assert_eq!(back, agg); // bitwise float equality via shortest repr
    }

    #[test]
    fn json_groups_rows_into_series() {
        let text = emit_plot_data(&sample(), PlotFormat::Json);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let series = doc["series"].as_array().unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0]["algorithm"], "crtm-style-ucb");
        assert_eq!(series[0]["points"].as_array().unwrap().len(), 2);
        assert_eq!(series[1]["d"], 20);
        assert!(doc["fields"]["mean_regret"].is_string());
    }

    #[test]
    fn malformed_csv_is_a_config_error() {
        assert_eq!(parse_plot_csv("wrong,header\n").unwrap_err().exit_code(), 2);
        let bad_row = "algorithm,d,t,mean_regret,std_regret,n_runs\nmedpe,2,5,x,0,1\n";
        assert_eq!(parse_plot_csv(bad_row).unwrap_err().exit_code(), 2);
    }
}

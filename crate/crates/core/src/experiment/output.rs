use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// `10 log10(NMSE)`, aggregated by median.
    NmseDb,
    Ser,
    SupportProb,
    Mismatch,
    ValidationError,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::NmseDb,
        Metric::Ser,
        Metric::SupportProb,
        Metric::Mismatch,
        Metric::ValidationError,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Metric::NmseDb => "nmse_db",
            Metric::Ser => "ser",
            Metric::SupportProb => "support_prob",
            Metric::Mismatch => "mismatch",
            Metric::ValidationError => "validation_error",
        }
    }

    /// Median for heavy-tailed NMSE, mean for everything else.
    pub fn uses_median(&self) -> bool {
        matches!(self, Metric::NmseDb)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub metric: Metric,
    pub value: f64,
    /// Half-width of the bootstrap 95% interval.
    pub ci95: f64,
    pub trials: usize,
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

const BOOTSTRAP_RESAMPLES: usize = 200;

/// Point estimate and bootstrap percentile 95% half-width.
pub(crate) fn aggregate<R: Rng + ?Sized>(values: &[f64], metric: Metric, rng: &mut R) -> (f64, f64) {
    let stat = if metric.uses_median() { median } else { mean };
    let value = stat(values);
    if values.len() < 2 {
        return (value, 0.0);
    }
    let mut resample = vec![0.0; values.len()];
    let mut stats: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for slot in resample.iter_mut() {
                *slot = values[rng.random_range(0..values.len())];
            }
            stat(&resample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let lo = stats[(0.025 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    let hi = stats[(0.975 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    let half = 0.5 * (hi - lo);
    (value, if half.is_finite() { half.max(0.0) } else { 0.0 })
}

pub const CSV_HEADER: &str = "x,metric,value,ci95,trials";

fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Renders the CSV text written by [`write_csv`].
pub fn render_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            number(p.x),
            p.metric,
            number(p.value),
            number(p.ci95),
            p.trials
        ));
    }
    out
}

pub fn write_csv(points: &[CurvePoint], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(render_csv(points).as_bytes()).map_err(io)
}

pub fn read_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header '{CSV_HEADER}'"))),
    }
    lines
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(parse_err(i + 1, format!("expected 5 fields, got {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(i + 1, format!("{s}: {e}")));
            Ok(CurvePoint {
                x: num(fields[0])?,
                metric: fields[1].parse().map_err(|e: Error| parse_err(i + 1, e.to_string()))?,
                value: num(fields[2])?,
                ci95: num(fields[3])?,
                trials: fields[4]
                    .parse()
                    .map_err(|e| parse_err(i + 1, format!("{}: {e}", fields[4])))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn toy() -> Vec<CurvePoint> {
        vec![
            CurvePoint {
                x: 0.0,
                metric: Metric::NmseDb,
                value: -12.5,
                ci95: 0.25,
                trials: 10,
            },
            CurvePoint {
                x: 10.0,
                metric: Metric::SupportProb,
                value: 0.1 + 0.2,
                ci95: 0.0,
                trials: 10,
            },
        ]
    }

    #[test]
    fn empty_list_is_header_only() {
        assert_eq!(render_csv(&[]), "x,metric,value,ci95,trials\n");
    }

    #[test]
    fn golden_toy_file() {
        let want = "x,metric,value,ci95,trials\n\
                    0.0000000000000000e0,nmse_db,-1.2500000000000000e1,2.5000000000000000e-1,10\n\
                    1.0000000000000000e1,support_prob,3.0000000000000004e-1,0.0000000000000000e0,10\n";
        assert_eq!(render_csv(&toy()), want);
    }

    #[test]
    fn round_trip_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/curve.csv");
        let mut points = toy();
        points[0].value = std::f64::consts::PI * 1e-7;
        points[1].x = -1.0 / 3.0;
        write_csv(&points, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), points);
    }

    #[test]
    fn aggregation_rules() {
        let mut rng = RngStream::new(61, 0).rng();
        let (v, ci) = aggregate(&[1.0, 2.0, 100.0], Metric::NmseDb, &mut rng);
        assert_eq!(v, 2.0);
        assert!(ci >= 0.0);
        let (v, _) = aggregate(&[0.0, 1.0, 1.0, 0.0], Metric::SupportProb, &mut rng);
        assert_eq!(v, 0.5);
        assert_eq!(aggregate(&[3.0], Metric::Ser, &mut rng), (3.0, 0.0));
    }

    #[test]
    fn ci_shrinks_with_trials() {
        let draw = |count: usize, seed: u64| {
            let mut rng = RngStream::new(seed, 0).rng();
            let values: Vec<f64> = (0..count).map(|_| f64::from(rng.random::<bool>())).collect();
            aggregate(&values, Metric::SupportProb, &mut rng).1
        };
        let small: f64 = (0..20).map(|s| draw(100, s)).sum::<f64>() / 20.0;
        let large: f64 = (0..20).map(|s| draw(400, s + 100)).sum::<f64>() / 20.0;
        let ratio = small / large;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }
}

//! Detection-log evaluation: confusion counts, the four score formulas and
//! frame-rate aggregation.
//!
//! `map_metric` is `(tp + tn) / total`. That is ordinary accuracy under
//! another name; the name is kept so reports line up with the published
//! table layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("empty detection log")]
    EmptyInput,
    #[error("{metric} is undefined: zero denominator")]
    UndefinedMetric { metric: &'static str },
    #[error("log line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, DetectionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub frame_id: u64,
    pub ground_truth: Option<String>,
    pub prediction: Option<String>,
    pub latency_ms: f64,
}

fn tally(c: &mut ConfusionCounts, r: &DetectionRecord) {
    match (&r.ground_truth, &r.prediction) {
        (Some(g), Some(p)) if g == p => c.tp += 1,
        (Some(_), Some(_)) => {
            c.fp += 1;
            c.fn_ += 1;
        }
        (None, Some(_)) => c.fp += 1,
        (Some(_), None) => c.fn_ += 1,
        (None, None) => c.tn += 1,
    }
}

/// A wrong label counts once as a false positive and once as a miss.
pub fn accumulate(records: &[DetectionRecord]) -> Result<ConfusionCounts> {
    if records.is_empty() {
        return Err(DetectionError::EmptyInput);
    }
    let mut c = ConfusionCounts::default();
    for r in records {
        tally(&mut c, r);
    }
    Ok(c)
}

fn ratio(num: u64, den: u64, metric: &'static str) -> Result<f64> {
    if den == 0 {
        Err(DetectionError::UndefinedMetric { metric })
    } else {
        Ok(num as f64 / den as f64)
    }
}

pub fn recall(c: &ConfusionCounts) -> Result<f64> {
    ratio(c.tp, c.tp + c.fn_, "recall")
}

pub fn precision(c: &ConfusionCounts) -> Result<f64> {
    ratio(c.tp, c.tp + c.fp, "precision")
}

pub fn map_metric(c: &ConfusionCounts) -> Result<f64> {
    ratio(c.tp + c.tn, c.total(), "map")
}

pub fn f1(c: &ConfusionCounts) -> Result<f64> {
    let (p, r) = (precision(c)?, recall(c)?);
    if p + r == 0.0 {
        return Err(DetectionError::UndefinedMetric { metric: "f1" });
    }
    Ok(2.0 * (p * r) / (p + r))
}

pub fn avg_fps(records: &[DetectionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(DetectionError::EmptyInput);
    }
    let mean = records.iter().map(|r| r.latency_ms).sum::<f64>() / records.len() as f64;
    Ok(1000.0 / mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DatasetId {
    D1,
    D2,
    D3,
    D4,
}

impl DatasetId {
    pub const ALL: [DatasetId; 4] = [DatasetId::D1, DatasetId::D2, DatasetId::D3, DatasetId::D4];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "D1" => DatasetId::D1,
            "D2" => DatasetId::D2,
            "D3" => DatasetId::D3,
            "D4" => DatasetId::D4,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetId::D1 => "D1",
            DatasetId::D2 => "D2",
            DatasetId::D3 => "D3",
            DatasetId::D4 => "D4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetDescriptor {
    pub id: DatasetId,
    pub nature: &'static str,
    pub testing_feature: &'static str,
}

pub fn descriptor(id: DatasetId) -> DatasetDescriptor {
    let (nature, testing_feature) = match id {
        DatasetId::D1 => ("Fast-moving blurred objects", "Fast movement detection"),
        DatasetId::D2 => ("Fast and Slow rotation of an object", "Expend the frame rate for the model"),
        DatasetId::D3 => ("Same object with small and large size", "Correct the error rate for mismatch detection"),
        DatasetId::D4 => ("Lower pixel image", "Improve the partial translation rate"),
    };
    DatasetDescriptor { id, nature, testing_feature }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    Recall,
    Precision,
    Map,
    F1,
}

impl MetricName {
    pub const ALL: [MetricName; 4] = [MetricName::Recall, MetricName::Precision, MetricName::Map, MetricName::F1];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::Recall => "Recall",
            MetricName::Precision => "Precision",
            MetricName::Map => "MAP",
            MetricName::F1 => "F1",
        }
    }

    pub fn eval(&self, c: &ConfusionCounts) -> Result<f64> {
        match self {
            MetricName::Recall => recall(c),
            MetricName::Precision => precision(c),
            MetricName::Map => map_metric(c),
            MetricName::F1 => f1(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    /// Dataset id, or `"D"` for the union of every log.
    pub dataset: String,
    pub metric: MetricName,
    pub score: Result<f64>,
    pub avg_fps: f64,
    pub accuracy_pct: Result<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub overall_counts: ConfusionCounts,
}

impl MetricReport {
    pub fn overall_accuracy_pct(&self) -> Result<f64> {
        map_metric(&self.overall_counts).map(|m| m * 100.0)
    }

    pub fn row(&self, dataset: &str, metric: MetricName) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.metric == metric)
    }

    /// Tab-separated table; undefined cells read `undefined`.
    pub fn to_tsv(&self) -> String {
        let cell = |v: &Result<f64>| match v {
            Ok(x) => format!("{x:.4}"),
            Err(_) => "undefined".to_string(),
        };
        let mut out = String::from("dataset\tmetric\tscore\tavg_fps\taccuracy_pct\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.2}\t{}",
                r.dataset,
                r.metric.as_str(),
                cell(&r.score),
                r.avg_fps,
                cell(&r.accuracy_pct)
            );
        }
        out
    }
}

fn rows_for(name: &str, records: &[DetectionRecord]) -> Result<(Vec<MetricRow>, ConfusionCounts)> {
    let counts = accumulate(records)?;
    let fps = avg_fps(records)?;
    let acc = map_metric(&counts).map(|m| m * 100.0);
    let rows = MetricName::ALL
        .iter()
        .map(|&m| MetricRow {
            dataset: name.to_string(),
            metric: m,
            score: m.eval(&counts),
            avg_fps: fps,
            accuracy_pct: acc.clone(),
        })
        .collect();
    Ok((rows, counts))
}

/// Per-dataset rows followed by rows for the union of all logs.
pub fn evaluate(logs: &BTreeMap<DatasetId, Vec<DetectionRecord>>) -> Result<MetricReport> {
    let mut rows = Vec::new();
    let mut union = Vec::new();
    for (id, records) in logs {
        if records.is_empty() {
            continue;
        }
        rows.extend(rows_for(id.as_str(), records)?.0);
        union.extend(records.iter().cloned());
    }
    if union.is_empty() {
        return Err(DetectionError::EmptyInput);
    }
    let (overall, overall_counts) = rows_for("D", &union)?;
    rows.extend(overall);
    Ok(MetricReport { rows, overall_counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionLog {
    pub dataset: DatasetId,
    pub records: Vec<DetectionRecord>,
}

impl DetectionLog {
    pub fn to_text(&self) -> String {
        let mut out = format!("odmlog v1 {}\n", self.dataset.as_str());
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.frame_id,
                r.ground_truth.as_deref().unwrap_or("-"),
                r.prediction.as_deref().unwrap_or("-"),
                r.latency_ms
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(DetectionError::EmptyInput)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let dataset = match parts.as_slice() {
            ["odmlog", "v1", id] => DatasetId::parse(id)
                .ok_or_else(|| DetectionError::Parse { line: 1, msg: format!("unknown dataset {id}") })?,
            _ => return Err(DetectionError::Parse { line: 1, msg: "expected `odmlog v1 <dataset>`".into() }),
        };
        let mut records = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in lines {
            let err = |msg: String| DetectionError::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.trim().split(',').collect();
            let [id, gt, pred, lat] = fields.as_slice() else {
                return Err(err(format!("expected 4 fields, got {}", fields.len())));
            };
            let label = |s: &str| (s != "-").then(|| s.to_string());
            let frame_id: u64 = id.parse().map_err(|e| err(format!("frame id: {e}")))?;
            let latency_ms: f64 = lat.parse().map_err(|e| err(format!("latency: {e}")))?;
            if !(latency_ms > 0.0 && latency_ms.is_finite()) {
                return Err(err(format!("latency must be > 0, got {latency_ms}")));
            }
            if !seen.insert(frame_id) {
                return Err(err(format!("duplicate frame id {frame_id}")));
            }
            records.push(DetectionRecord { frame_id, ground_truth: label(gt), prediction: label(pred), latency_ms });
        }
        Ok(Self { dataset, records })
    }
}

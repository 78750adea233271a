use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Confusion counts with out-of-distribution as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, truth_ood: bool, predicted_ood: bool) {
        match (truth_ood, predicted_ood) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// A metric that may be undefined (division by zero). Serialized as a
/// number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric(pub Option<f64>);

impl Metric {
    fn ratio(num: u64, den: u64) -> Self {
        Metric((den > 0).then(|| num as f64 / den as f64))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric(Some(v))),
            Raw::Str(s) if s == "undefined" => Ok(Metric(None)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad metric value '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Metric,
    pub precision: Metric,
    pub recall: Metric,
    pub specificity: Metric,
    pub f1: Metric,
    /// Youden's J: recall + specificity - 1.
    pub j: Metric,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    let accuracy = Metric::ratio(c.tp + c.tn, c.total());
    let precision = Metric::ratio(c.tp, c.tp + c.fp);
    let recall = Metric::ratio(c.tp, c.tp + c.fn_);
    let specificity = Metric::ratio(c.tn, c.tn + c.fp);
    let f1 = match (precision.0, recall.0) {
        (Some(p), Some(r)) if p + r > 0.0 => Metric(Some(2.0 * p * r / (p + r))),
        _ => Metric(None),
    };
    let j = match (recall.0, specificity.0) {
        (Some(r), Some(s)) => Metric(Some(r + s - 1.0)),
        _ => Metric(None),
    };
    Metrics { accuracy, precision, recall, specificity, f1, j }
}

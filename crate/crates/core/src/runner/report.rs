use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::ser::{SerializeMap, SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};

#[derive(Clone, Debug, PartialEq)]
pub enum ResultValue {
    Scalar(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
    Vector(Vec<f64>),
    /// Row-major.
    Matrix(Vec<Vec<f64>>),
}

impl ResultValue {
    pub fn matrix(m: &DMatrix<f64>) -> Self {
        ResultValue::Matrix(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

impl Serialize for ResultValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ResultValue::Scalar(x) => s.serialize_f64(*x),
            ResultValue::Integer(i) => s.serialize_i64(*i),
            ResultValue::Bool(b) => s.serialize_bool(*b),
            ResultValue::Text(t) => s.serialize_str(t),
            ResultValue::Vector(v) => v.serialize(s),
            ResultValue::Matrix(m) => m.serialize(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub label: String,
}

impl Verdict {
    pub fn new(pass: bool, label: impl Into<String>) -> Self {
        Self { pass, label: label.into() }
    }
}

/// One row of the report. `results` keeps insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRecord {
    pub experiment: String,
    pub kind: String,
    pub record: usize,
    pub inputs: serde_json::Value,
    pub results: Vec<(String, ResultValue)>,
    pub verdict: Verdict,
    pub tolerances: BTreeMap<String, f64>,
    pub wall_time: Option<f64>,
}

impl ReportRecord {
    pub fn result(&self, key: &str) -> Option<&ResultValue> {
        self.results.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?}; expected json or csv")),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(real(value).as_bytes())
        } else {
            write!(w, "\"{}\"", real(value))
        }
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

struct Ordered<'a>(&'a [(String, ResultValue)]);

impl Serialize for Ordered<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

struct RecordView<'a> {
    rec: &'a ReportRecord,
    timings: bool,
}

impl Serialize for RecordView<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = self.rec;
        let wall = self.timings.then_some(r.wall_time).flatten();
        let mut st = s.serialize_struct("record", 7 + wall.is_some() as usize)?;
        st.serialize_field("experiment", &r.experiment)?;
        st.serialize_field("kind", &r.kind)?;
        st.serialize_field("record", &r.record)?;
        st.serialize_field("inputs", &r.inputs)?;
        st.serialize_field("results", &Ordered(&r.results))?;
        st.serialize_field("verdict", &r.verdict)?;
        st.serialize_field("tolerances", &r.tolerances)?;
        if let Some(t) = wall {
            st.serialize_field("wall_time_s", &t)?;
        }
        st.end()
    }
}

struct Records<'a> {
    records: &'a [ReportRecord],
    timings: bool,
}

impl Serialize for Records<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Seq<'b>(&'b Records<'b>);
        impl Serialize for Seq<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut seq = s.serialize_seq(Some(self.0.records.len()))?;
                for rec in self.0.records {
                    seq.serialize_element(&RecordView { rec, timings: self.0.timings })?;
                }
                seq.end()
            }
        }
        let mut st = s.serialize_struct("report", 1)?;
        st.serialize_field("records", &Seq(self))?;
        st.end()
    }
}

/// `{"records": [...]}` with reals at 17 significant digits.
/// Wall times appear only when `timings` is set, keeping reports reproducible.
pub fn render_json(records: &[ReportRecord], timings: bool) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    Records { records, timings }
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    out.push(b'\n');
    out
}

pub const CSV_HEADER: [&str; 6] = ["experiment", "record", "key", "row", "col", "value"];

/// Long format: one line per scalar entry. Vectors fill `row`; matrices fill `row` and `col`.
pub fn render_csv(records: &[ReportRecord], timings: bool) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, r: &ReportRecord, key: &str, row: String, col: String, value: String| {
        w.write_record([r.experiment.as_str(), &r.record.to_string(), key, &row, &col, &value])
            .expect("writing to memory cannot fail");
    };
    w.write_record(CSV_HEADER).expect("writing to memory cannot fail");
    for r in records {
        write(&mut w, r, "inputs", String::new(), String::new(), r.inputs.to_string());
        for (key, v) in &r.results {
            match v {
                ResultValue::Scalar(x) => write(&mut w, r, key, String::new(), String::new(), real(*x)),
                ResultValue::Integer(i) => write(&mut w, r, key, String::new(), String::new(), i.to_string()),
                ResultValue::Bool(b) => write(&mut w, r, key, String::new(), String::new(), b.to_string()),
                ResultValue::Text(t) => write(&mut w, r, key, String::new(), String::new(), t.clone()),
                ResultValue::Vector(xs) => {
                    for (i, x) in xs.iter().enumerate() {
                        write(&mut w, r, key, i.to_string(), String::new(), real(*x));
                    }
                }
                ResultValue::Matrix(rows) => {
                    for (i, row) in rows.iter().enumerate() {
                        for (j, x) in row.iter().enumerate() {
                            write(&mut w, r, key, i.to_string(), j.to_string(), real(*x));
                        }
                    }
                }
            }
        }
        write(&mut w, r, "verdict.pass", String::new(), String::new(), r.verdict.pass.to_string());
        write(&mut w, r, "verdict.label", String::new(), String::new(), r.verdict.label.clone());
        for (k, t) in &r.tolerances {
            write(&mut w, r, &format!("tolerance.{k}"), String::new(), String::new(), real(*t));
        }
        if let (true, Some(t)) = (timings, r.wall_time) {
            write(&mut w, r, "wall_time_s", String::new(), String::new(), real(t));
        }
    }
    w.into_inner().expect("writing to memory cannot fail")
}

/// Writes the report to `path`, or stdout when `None`.
pub fn emit_report(records: &[ReportRecord], format: ReportFormat, path: Option<&Path>, timings: bool) -> io::Result<()> {
    let bytes = match format {
        ReportFormat::Json => render_json(records, timings),
        ReportFormat::Csv => render_csv(records, timings),
    };
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => io::stdout().lock().write_all(&bytes),
    }
}

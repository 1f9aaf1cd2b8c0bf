use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::resampling::Resample;

/// One subject followed over two intervals.
///
/// `None` marks a structurally missing value (after censoring or after the
/// event).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record {
    pub w0: f64,
    pub a0: bool,
    /// `true` = uncensored through interval 1.
    pub c1: bool,
    pub y1: Option<bool>,
    pub w1: Option<f64>,
    pub a1: Option<bool>,
    pub c2: Option<bool>,
    pub y2: Option<bool>,
}

impl Record {
    /// Check monotone missingness and the absorbing event.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.w0.is_finite() {
            return Err("W0 must be finite".into());
        }
        if !self.c1 {
            if self.y1.is_some() || self.w1.is_some() || self.a1.is_some() || self.y2.is_some() {
                return Err("C1 = 0 requires Y1, W1, A1, Y2 missing".into());
            }
            if self.c2 != Some(false) {
                return Err("C1 = 0 requires C2 = 0".into());
            }
            return Ok(());
        }
        match self.y1 {
            None => Err("C1 = 1 requires Y1 observed".into()),
            Some(true) => {
                if self.w1.is_some() || self.a1.is_some() {
                    return Err("Y1 = 1 requires W1 and A1 missing".into());
                }
                if self.c2 == Some(false) {
                    return Err("Y1 = 1 cannot be followed by censoring".into());
                }
                if self.y2 == Some(false) {
                    return Err("Y1 = 1 is absorbing: Y2 must be 1 or missing".into());
                }
                Ok(())
            }
            Some(false) => {
                match self.w1 {
                    Some(w) if w.is_finite() => {}
                    _ => return Err("Y1 = 0 requires a finite W1".into()),
                }
                if self.a1.is_none() {
                    return Err("Y1 = 0 requires A1 observed".into());
                }
                match (self.c2, self.y2) {
                    (None, _) => Err("Y1 = 0 requires C2 observed".into()),
                    (Some(true), None) => Err("C2 = 1 requires Y2 observed".into()),
                    (Some(false), Some(_)) => Err("C2 = 0 requires Y2 missing".into()),
                    _ => Ok(()),
                }
            }
        }
    }

    /// Event observed by the end of interval 2 (absorbing).
    pub fn event_by_two(&self) -> Option<bool> {
        match (self.c1, self.y1) {
            (true, Some(true)) => Some(true),
            (true, Some(false)) => self.y2,
            _ => None,
        }
    }
}

pub const CSV_HEADER: [&str; 8] = ["W0", "A0", "C1", "Y1", "W1", "A1", "C2", "Y2"];

/// Validated two-interval longitudinal data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LongitudinalDataset {
    records: Vec<Record>,
}

impl LongitudinalDataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (row, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|reason| Error::InvalidRecord { row, reason })?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parse CSV with header `W0,A0,C1,Y1,W1,A1,C2,Y2`; empty cells are
    /// missing.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        let names: Vec<&str> = header.iter().map(str::trim).collect();
        if names != CSV_HEADER {
            return Err(Error::InvalidRecord {
                row: 0,
                reason: format!(
                    "expected header {}, found {}",
                    CSV_HEADER.join(","),
                    names.join(",")
                ),
            });
        }
        let mut records = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |reason: String| Error::InvalidRecord { row, reason };
            let cell = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
            let real = |k: usize| -> Result<Option<f64>> {
                let s = cell(k);
                if s.is_empty() || s.eq_ignore_ascii_case("na") {
                    return Ok(None);
                }
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| bad(format!("{}: `{s}` is not a number", CSV_HEADER[k])))
            };
            let flag = |k: usize| -> Result<Option<bool>> {
                match cell(k) {
                    "" | "NA" | "na" => Ok(None),
                    "0" => Ok(Some(false)),
                    "1" => Ok(Some(true)),
                    s => Err(bad(format!("{}: `{s}` is not 0/1", CSV_HEADER[k]))),
                }
            };
            let required_real = |k: usize| {
                real(k)?.ok_or_else(|| bad(format!("{} must be present", CSV_HEADER[k])))
            };
            let required_flag = |k: usize| {
                flag(k)?.ok_or_else(|| bad(format!("{} must be present", CSV_HEADER[k])))
            };
            let r = Record {
                w0: required_real(0)?,
                a0: required_flag(1)?,
                c1: required_flag(2)?,
                y1: flag(3)?,
                w1: real(4)?,
                a1: flag(5)?,
                c2: flag(6)?,
                y2: flag(7)?,
            };
            r.validate().map_err(bad)?;
            records.push(r);
        }
        Ok(Self { records })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        let flag = |b: Option<bool>| match b {
            None => String::new(),
            Some(true) => "1".into(),
            Some(false) => "0".into(),
        };
        let real = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                real(Some(r.w0)),
                flag(Some(r.a0)),
                flag(Some(r.c1)),
                flag(r.y1),
                real(r.w1),
                flag(r.a1),
                flag(r.c2),
                flag(r.y2),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Resample for LongitudinalDataset {
    fn n_obs(&self) -> usize {
        self.records.len()
    }

    fn select(&self, indices: &[usize]) -> Self {
        Self {
            records: indices.iter().map(|&i| self.records[i]).collect(),
        }
    }
}

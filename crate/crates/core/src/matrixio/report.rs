//! JSON analysis reports.
//!
//! Floats are written in scientific notation with 17 significant digits
//! (`{:.16e}`), enough to round-trip any binary64 value, so the same run
//! always yields the same bytes.

use std::fs;
use std::io;
use std::path::Path;

use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{HubError, Result};
use crate::freqcorr::CorrelationReport;
use crate::hubstats::{Histogram, HubSummary};
use crate::predeval::AccuracyPartition;

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct HubEntry {
    pub id: usize,
    pub n_k: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct Diagnostics {
    pub relative_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_l2_to_uniform: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct MitigationSummary {
    pub method: String,
    pub k_skew_before: f64,
    pub k_skew_after: f64,
    pub num_hubs_before: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct AnalysisReport {
    pub measure: String,
    pub k: usize,
    pub hub_threshold: u64,
    pub k_skew: f64,
    pub hubs: Vec<HubEntry>,
    pub summary: HubSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub correlation: Option<CorrelationReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<AccuracyPartition>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mitigation: Option<MitigationSummary>,
    pub config: serde_json::Value,
}

impl AnalysisReport {
    /// Checks that the hub list and summary agree with each other.
    pub fn check_consistency(&self) -> Result<()> {
        if let Some(h) = self.hubs.iter().find(|h| h.n_k < self.hub_threshold) {
            return Err(HubError::Data(format!(
                "hub {} has N_k {} below threshold {}",
                h.id, h.n_k, self.hub_threshold
            )));
        }
        if self.summary.num_hubs != self.hubs.len() {
            return Err(HubError::Data(format!(
                "summary counts {} hubs, list has {}",
                self.summary.num_hubs,
                self.hubs.len()
            )));
        }
        if self.summary.max != self.hubs.iter().map(|h| h.n_k).max() {
            return Err(HubError::Data("summary max disagrees with hub list".into()));
        }
        Ok(())
    }
}

/// Pretty JSON with fixed-precision floats.
struct FixedFloatFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let formatter = FixedFloatFormatter {
        inner: PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| HubError::Data(format!("report serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json_string(value)?).map_err(|e| HubError::io(path, e))
}

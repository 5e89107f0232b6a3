//! Columnar dataset formats, version `v1`.
//!
//! One schema is shared by the synthetic generator (writer) and the fitting
//! tools (readers): tab-separated values under a `#`-prefixed header block
//! carrying the format version, device tag, axis-alignment metadata and
//! current-source tag. Floats are printed in Rust's shortest round-trip
//! form, so `parse(serialize(x)) == x` bit-exactly; missing optional values
//! are written as `-`.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

pub const FORMAT_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing or malformed header: {0}")]
    Header(String),
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: &'static str },
    #[error("dataset is empty")]
    Empty,
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T, DatasetError> {
    Err(DatasetError::Parse { line: line + 1, message: message.into() })
}

/// Spectroscopy transition labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    F01,
    F02Half,
    F01Even,
    F01Odd,
    Cavity,
}

impl Transition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transition::F01 => "f01",
            Transition::F02Half => "f02_half",
            Transition::F01Even => "f01_even",
            Transition::F01Odd => "f01_odd",
            Transition::Cavity => "cavity",
        }
    }
}

impl FromStr for Transition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f01" => Ok(Transition::F01),
            "f02_half" => Ok(Transition::F02Half),
            "f01_even" => Ok(Transition::F01Even),
            "f01_odd" => Ok(Transition::F01Odd),
            "cavity" => Ok(Transition::Cavity),
            other => Err(format!("unknown transition label {other:?}")),
        }
    }
}

/// Shared header block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    /// Which transmon the records belong to (e.g. "single_jj", "squid").
    pub device: String,
    /// Residual misalignment of the in-plane axis after software rotation
    /// [deg].
    pub alignment_angle_deg: f64,
    /// Current source powering the in-plane coil.
    pub current_source: String,
}

impl Default for DatasetHeader {
    fn default() -> Self {
        Self {
            device: "unknown".into(),
            alignment_angle_deg: 0.0,
            current_source: "unknown".into(),
        }
    }
}

/// One spectroscopy record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyRecord {
    pub sweep_id: u32,
    pub b_par_t: f64,
    pub b_perp_t: f64,
    pub transition: Transition,
    pub freq_ghz: f64,
    pub sigma_ghz: Option<f64>,
    pub timestamp: u64,
}

/// Tagged (field, transition, frequency) records with sweep metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyDataset {
    pub header: DatasetHeader,
    pub records: Vec<SpectroscopyRecord>,
}

/// One coherence record; each time is optional with an optional 1-sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRecord {
    pub sweep_id: u32,
    pub b_par_t: f64,
    pub b_perp_t: f64,
    pub t1_us: Option<f64>,
    pub t1_sigma_us: Option<f64>,
    pub t2_star_us: Option<f64>,
    pub t2_star_sigma_us: Option<f64>,
    pub t2_echo_us: Option<f64>,
    pub t2_echo_sigma_us: Option<f64>,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceDataset {
    pub header: DatasetHeader,
    pub records: Vec<CoherenceRecord>,
}

/// One row of a magnet-alignment scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScanRecord {
    pub b_x_t: f64,
    pub b_y_t: f64,
    pub arch_offset_t: f64,
}

/// One point of an extracted E_J(B_par) curve. `junction` names the curve:
/// by convention `single`, `squid_sum`, `squid_diff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EjCurveRecord {
    pub junction: String,
    pub b_par_t: f64,
    pub ej_ghz: f64,
    pub sigma_ghz: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "-".into(),
    }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64, DatasetError> {
    tok.parse::<f64>().map_err(|e| DatasetError::Parse {
        line: line + 1,
        message: format!("bad {what} {tok:?}: {e}"),
    })
}

fn parse_opt_f64(tok: &str, line: usize, what: &str) -> Result<Option<f64>, DatasetError> {
    if tok == "-" {
        Ok(None)
    } else {
        parse_f64(tok, line, what).map(Some)
    }
}

struct HeaderScan {
    fields: Vec<(String, String)>,
    body_start: usize,
}

fn scan_header(text: &str, expected_kind: &str) -> Result<HeaderScan, DatasetError> {
    let mut lines = text.lines().enumerate();
    let (_, first) =
        lines.next().ok_or_else(|| DatasetError::Header("empty file".into()))?;
    // first line: "# tmfield <kind> <version>"
    let mut parts = first.strip_prefix("# ").unwrap_or("").split_whitespace();
    if parts.next() != Some("tmfield") {
        return Err(DatasetError::Header(format!(
            "expected '# tmfield {expected_kind} {FORMAT_VERSION}', got {first:?}"
        )));
    }
    let kind = parts.next().unwrap_or("");
    let version = parts.next().unwrap_or("");
    if kind != expected_kind {
        return Err(DatasetError::Header(format!(
            "expected kind {expected_kind:?}, got {kind:?}"
        )));
    }
    if version != FORMAT_VERSION {
        return Err(DatasetError::Version { found: version.into(), expected: FORMAT_VERSION });
    }

    let mut fields = Vec::new();
    let mut body_start = 1;
    for (i, line) in lines {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(" = ") {
                fields.push((k.trim().to_string(), v.trim().to_string()));
            }
            body_start = i + 1;
        } else {
            body_start = i;
            break;
        }
    }
    Ok(HeaderScan { fields, body_start })
}

fn header_from_fields(fields: &[(String, String)]) -> Result<DatasetHeader, DatasetError> {
    let mut h = DatasetHeader::default();
    for (k, v) in fields {
        match k.as_str() {
            "device" => h.device = v.clone(),
            "alignment_angle_deg" => {
                h.alignment_angle_deg = v
                    .parse()
                    .map_err(|e| DatasetError::Header(format!("alignment_angle_deg: {e}")))?
            }
            "current_source" => h.current_source = v.clone(),
            "columns" => {}
            other => {
                return Err(DatasetError::Header(format!("unknown header field {other:?}")))
            }
        }
    }
    Ok(h)
}

fn write_header(out: &mut String, kind: &str, header: &DatasetHeader, columns: &str) {
    let _ = writeln!(out, "# tmfield {kind} {FORMAT_VERSION}");
    let _ = writeln!(out, "# device = {}", header.device);
    let _ = writeln!(out, "# alignment_angle_deg = {}", header.alignment_angle_deg);
    let _ = writeln!(out, "# current_source = {}", header.current_source);
    let _ = writeln!(out, "# columns = {columns}");
}

impl SpectroscopyDataset {
    /// Sort records by (sweep id, B_par, B_perp, transition) for canonical
    /// output.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            (a.sweep_id, a.b_par_t, a.b_perp_t, a.transition.as_str())
                .partial_cmp(&(b.sweep_id, b.b_par_t, b.b_perp_t, b.transition.as_str()))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        write_header(
            &mut out,
            "spectroscopy",
            &self.header,
            "sweep_id b_par_t b_perp_t transition freq_ghz sigma_ghz timestamp",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.sweep_id,
                r.b_par_t,
                r.b_perp_t,
                r.transition.as_str(),
                r.freq_ghz,
                fmt_opt(r.sigma_ghz),
                r.timestamp
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let scan = scan_header(text, "spectroscopy")?;
        let header = header_from_fields(&scan.fields)?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().skip(scan.body_start) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split('\t').collect();
            if tok.len() != 7 {
                return parse_err(i, format!("expected 7 columns, got {}", tok.len()));
            }
            let transition = Transition::from_str(tok[3])
                .map_err(|e| DatasetError::Parse { line: i + 1, message: e })?;
            let freq_ghz = parse_f64(tok[4], i, "frequency")?;
            if !(freq_ghz > 0.0) {
                return parse_err(i, format!("frequency must be positive, got {freq_ghz}"));
            }
            records.push(SpectroscopyRecord {
                sweep_id: tok[0].parse().map_err(|e| DatasetError::Parse {
                    line: i + 1,
                    message: format!("bad sweep id: {e}"),
                })?,
                b_par_t: parse_f64(tok[1], i, "b_par")?,
                b_perp_t: parse_f64(tok[2], i, "b_perp")?,
                transition,
                freq_ghz,
                sigma_ghz: parse_opt_f64(tok[5], i, "sigma")?,
                timestamp: tok[6].parse().map_err(|e| DatasetError::Parse {
                    line: i + 1,
                    message: format!("bad timestamp: {e}"),
                })?,
            });
        }
        Ok(Self { header, records })
    }
}

impl CoherenceDataset {
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            (a.sweep_id, a.b_par_t, a.b_perp_t)
                .partial_cmp(&(b.sweep_id, b.b_par_t, b.b_perp_t))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        write_header(
            &mut out,
            "coherence",
            &self.header,
            "sweep_id b_par_t b_perp_t t1_us t1_sigma_us t2_star_us t2_star_sigma_us \
             t2_echo_us t2_echo_sigma_us timestamp",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.sweep_id,
                r.b_par_t,
                r.b_perp_t,
                fmt_opt(r.t1_us),
                fmt_opt(r.t1_sigma_us),
                fmt_opt(r.t2_star_us),
                fmt_opt(r.t2_star_sigma_us),
                fmt_opt(r.t2_echo_us),
                fmt_opt(r.t2_echo_sigma_us),
                r.timestamp
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let scan = scan_header(text, "coherence")?;
        let header = header_from_fields(&scan.fields)?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().skip(scan.body_start) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split('\t').collect();
            if tok.len() != 10 {
                return parse_err(i, format!("expected 10 columns, got {}", tok.len()));
            }
            let rec = CoherenceRecord {
                sweep_id: tok[0].parse().map_err(|e| DatasetError::Parse {
                    line: i + 1,
                    message: format!("bad sweep id: {e}"),
                })?,
                b_par_t: parse_f64(tok[1], i, "b_par")?,
                b_perp_t: parse_f64(tok[2], i, "b_perp")?,
                t1_us: parse_opt_f64(tok[3], i, "t1")?,
                t1_sigma_us: parse_opt_f64(tok[4], i, "t1 sigma")?,
                t2_star_us: parse_opt_f64(tok[5], i, "t2*")?,
                t2_star_sigma_us: parse_opt_f64(tok[6], i, "t2* sigma")?,
                t2_echo_us: parse_opt_f64(tok[7], i, "t2 echo")?,
                t2_echo_sigma_us: parse_opt_f64(tok[8], i, "t2 echo sigma")?,
                timestamp: tok[9].parse().map_err(|e| DatasetError::Parse {
                    line: i + 1,
                    message: format!("bad timestamp: {e}"),
                })?,
            };
            for t in [rec.t1_us, rec.t2_star_us, rec.t2_echo_us].into_iter().flatten() {
                if !(t > 0.0) {
                    return parse_err(i, format!("times must be positive, got {t}"));
                }
            }
            records.push(rec);
        }
        Ok(Self { header, records })
    }
}

/// Serialize an alignment scan.
pub fn serialize_alignment_scan(records: &[AlignmentScanRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tmfield alignment-scan {FORMAT_VERSION}");
    let _ = writeln!(out, "# columns = b_x_t b_y_t arch_offset_t");
    for r in records {
        let _ = writeln!(out, "{}\t{}\t{}", r.b_x_t, r.b_y_t, r.arch_offset_t);
    }
    out
}

pub fn parse_alignment_scan(text: &str) -> Result<Vec<AlignmentScanRecord>, DatasetError> {
    let scan = scan_header(text, "alignment-scan")?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().skip(scan.body_start) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split('\t').collect();
        if tok.len() != 3 {
            return parse_err(i, format!("expected 3 columns, got {}", tok.len()));
        }
        records.push(AlignmentScanRecord {
            b_x_t: parse_f64(tok[0], i, "b_x")?,
            b_y_t: parse_f64(tok[1], i, "b_y")?,
            arch_offset_t: parse_f64(tok[2], i, "arch offset")?,
        });
    }
    Ok(records)
}

/// Serialize an E_J(B_par) curve file.
pub fn serialize_ej_curves(records: &[EjCurveRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tmfield ej-curve {FORMAT_VERSION}");
    let _ = writeln!(out, "# columns = junction b_par_t ej_ghz sigma_ghz");
    for r in records {
        let _ =
            writeln!(out, "{}\t{}\t{}\t{}", r.junction, r.b_par_t, r.ej_ghz, fmt_opt(r.sigma_ghz));
    }
    out
}

pub fn parse_ej_curves(text: &str) -> Result<Vec<EjCurveRecord>, DatasetError> {
    let scan = scan_header(text, "ej-curve")?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().skip(scan.body_start) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split('\t').collect();
        if tok.len() != 4 {
            return parse_err(i, format!("expected 4 columns, got {}", tok.len()));
        }
        records.push(EjCurveRecord {
            junction: tok[0].to_string(),
            b_par_t: parse_f64(tok[1], i, "b_par")?,
            ej_ghz: parse_f64(tok[2], i, "ej")?,
            sigma_ghz: parse_opt_f64(tok[3], i, "sigma")?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_spectroscopy() -> SpectroscopyDataset {
        SpectroscopyDataset {
            header: DatasetHeader {
                device: "squid".into(),
                alignment_angle_deg: -0.61,
                current_source: "oxford".into(),
            },
            records: vec![
                SpectroscopyRecord {
                    sweep_id: 0,
                    b_par_t: 0.17,
                    b_perp_t: -4.3e-4,
                    transition: Transition::F01,
                    freq_ghz: 6.123456789012345,
                    sigma_ghz: Some(1e-3),
                    timestamp: 42,
                },
                SpectroscopyRecord {
                    sweep_id: 0,
                    b_par_t: 0.17,
                    b_perp_t: -4.3e-4,
                    transition: Transition::F02Half,
                    freq_ghz: 6.01,
                    sigma_ghz: None,
                    timestamp: 43,
                },
            ],
        }
    }

    #[test]
    fn spectroscopy_roundtrip_bit_exact() {
        let ds = sample_spectroscopy();
        let text = ds.serialize();
        let parsed = SpectroscopyDataset::parse(&text).unwrap();
        assert_eq!(parsed, ds);
        // canonical re-serialization is byte-identical
        assert_eq!(parsed.serialize(), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut text = sample_spectroscopy().serialize();
        text.push_str("0\t0.1\t0.0\tf01\tnot_a_number\t-\t7\n");
        let err = SpectroscopyDataset::parse(&text).unwrap_err();
        match err {
            DatasetError::Parse { line, message } => {
                assert_eq!(line, 8);
                assert!(message.contains("frequency"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_rejected() {
        let mut text = sample_spectroscopy().serialize();
        text.push_str("0\t0.1\t0.0\tf03\t5.0\t-\t7\n");
        assert!(matches!(SpectroscopyDataset::parse(&text), Err(DatasetError::Parse { .. })));
    }

    #[test]
    fn version_mismatch_rejected() {
        let text = sample_spectroscopy().serialize().replace("v1", "v9");
        assert!(matches!(SpectroscopyDataset::parse(&text), Err(DatasetError::Version { .. })));
    }

    #[test]
    fn negative_frequency_rejected() {
        let mut ds = sample_spectroscopy();
        ds.records[0].freq_ghz = -1.0;
        assert!(SpectroscopyDataset::parse(&ds.serialize()).is_err());
    }

    #[test]
    fn coherence_roundtrip_with_missing_values() {
        let ds = CoherenceDataset {
            header: DatasetHeader::default(),
            records: vec![CoherenceRecord {
                sweep_id: 3,
                b_par_t: 0.34,
                b_perp_t: 1.2e-4,
                t1_us: Some(31.5),
                t1_sigma_us: Some(0.8),
                t2_star_us: None,
                t2_star_sigma_us: None,
                t2_echo_us: Some(12.0),
                t2_echo_sigma_us: None,
                timestamp: 99,
            }],
        };
        let parsed = CoherenceDataset::parse(&ds.serialize()).unwrap();
        assert_eq!(parsed, ds);
    }

    #[test]
    fn records_sortable() {
        let mut ds = sample_spectroscopy();
        ds.records.reverse();
        ds.sort();
        assert_eq!(ds.records[0].transition, Transition::F01);
    }

    #[test]
    fn ej_curve_and_alignment_roundtrip() {
        let curves = vec![EjCurveRecord {
            junction: "squid_sum".into(),
            b_par_t: 0.25,
            ej_ghz: 18.75,
            sigma_ghz: None,
        }];
        assert_eq!(parse_ej_curves(&serialize_ej_curves(&curves)).unwrap(), curves);

        let scan = vec![AlignmentScanRecord { b_x_t: 1e-4, b_y_t: 0.05, arch_offset_t: -2e-4 }];
        assert_eq!(parse_alignment_scan(&serialize_alignment_scan(&scan)).unwrap(), scan);
    }

    proptest! {
        // bit-exact float round-trip through the text format
        #[test]
        fn float_roundtrip_bit_exact(
            b_par in -1.0f64..1.0,
            b_perp in proptest::num::f64::NORMAL,
            freq in 1e-6f64..1e3,
            sigma in proptest::option::of(1e-9f64..1.0),
        ) {
            let ds = SpectroscopyDataset {
                header: DatasetHeader::default(),
                records: vec![SpectroscopyRecord {
                    sweep_id: 7,
                    b_par_t: b_par,
                    b_perp_t: b_perp,
                    transition: Transition::F01Odd,
                    freq_ghz: freq,
                    sigma_ghz: sigma,
                    timestamp: 1,
                }],
            };
            let parsed = SpectroscopyDataset::parse(&ds.serialize()).unwrap();
            let (a, b) = (parsed.records[0], ds.records[0]);
            prop_assert_eq!(a.b_par_t.to_bits(), b.b_par_t.to_bits());
            prop_assert_eq!(a.b_perp_t.to_bits(), b.b_perp_t.to_bits());
            prop_assert_eq!(a.freq_ghz.to_bits(), b.freq_ghz.to_bits());
            prop_assert_eq!(a.sigma_ghz.map(f64::to_bits), b.sigma_ghz.map(f64::to_bits));
        }
    }
}

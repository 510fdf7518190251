//! CSV design files, JSON sidecars and the metadata comment carried by every output table.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{CriterionKind, Design};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::optim::GeneratorLayout;
use crate::rlhd::RlhdSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Decimal with 17 significant digits in positional notation (scientific beyond `1e17`).
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if e > 16 || e < -300 {
        format!("{x:.16e}")
    } else {
        format!("{x:.*}", (16 - e).max(0) as usize)
    }
}

/// Git-style blob hash (`sha256("blob {len}\0{content}")`), hex encoded.
pub fn content_hash(content: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// `# latticelhd <version> seed=<seed> config=<hash>`
pub fn metadata_line(seed: u64, config: &str) -> String {
    format!(
        "# latticelhd {VERSION} seed={seed} config={}",
        content_hash(config)
    )
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

pub fn write_design_csv<W: Write>(mut w: W, design: &Design, metadata: Option<&str>) -> Result<()> {
    if let Some(m) = metadata {
        writeln!(w, "{m}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record((1..=design.d()).map(|k| format!("x{k}")))?;
    for row in design.rows() {
        out.write_record(row.iter().map(|&x| fmt17(x)))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_design(path: impl AsRef<Path>, design: &Design, metadata: Option<&str>) -> Result<()> {
    write_design_csv(BufWriter::new(File::create(path)?), design, metadata)
}

/// Reads a numeric table with a header row, skipping `#` comment lines.
pub fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    Error::InvalidDesign(format!("row {}: `{f}` is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_design_csv<R: Read>(r: R) -> Result<Design> {
    let (header, rows) = read_table(r)?;
    if rows.is_empty() {
        return Err(Error::InvalidDesign("design file has no rows".into()));
    }
    if rows.iter().any(|r| r.len() != header.len()) {
        return Err(Error::InvalidDesign("rows differ in length from the header".into()));
    }
    Design::from_rows(&rows)
}

pub fn load_design(path: impl AsRef<Path>) -> Result<Design> {
    read_design_csv(File::open(path)?)
}

/// Single-column (or first-column) numeric values, e.g. simulator outputs.
pub fn load_values(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let (_, rows) = read_table(File::open(path)?)?;
    rows.into_iter()
        .map(|r| {
            r.first()
                .copied()
                .ok_or_else(|| Error::InvalidDesign("empty row in value file".into()))
        })
        .collect()
}

/// Writes a numeric table with a header and optional metadata comment.
pub fn write_table<W: Write>(
    mut w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
    metadata: Option<&str>,
) -> Result<()> {
    if let Some(m) = metadata {
        writeln!(w, "{m}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.iter().map(|&x| fmt17(x)))?;
    }
    out.flush()?;
    Ok(())
}

/// Design metadata stored next to a CSV design.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(rename = "type")]
    pub kind: String,
    pub n: u64,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<i64>>,
    /// Denominator of a fractional shift (slices only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_den: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<GeneratorLayout>,
}

impl Sidecar {
    pub fn for_lattice(kind: &str, spec: &LatticeSpec) -> Self {
        Self {
            kind: kind.into(),
            n: spec.n(),
            d: spec.d(),
            v: Some(spec.v().to_vec()),
            delta: Some(spec.delta().to_vec()),
            delta_den: (spec.delta_den() != 1).then_some(spec.delta_den()),
            ..Default::default()
        }
    }

    pub fn for_rlhd(spec: &RlhdSpec) -> Self {
        Self {
            kind: "rlhd".into(),
            n: spec.n(),
            d: spec.d(),
            v: Some(spec.v().to_vec()),
            delta: Some(spec.delta().to_vec()),
            m: Some(spec.m()),
            ..Default::default()
        }
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        match (&self.v, &self.delta) {
            (Some(v), Some(delta)) => LatticeSpec::with_rational_shift(
                self.n,
                v.clone(),
                delta.clone(),
                self.delta_den.unwrap_or(1),
            ),
            _ => Err(Error::InvalidParameter("sidecar lacks v or delta".into())),
        }
    }

    pub fn rlhd_spec(&self) -> Result<RlhdSpec> {
        match (&self.v, &self.delta, self.m) {
            (Some(v), Some(delta), Some(m)) => RlhdSpec::new(self.n, m, v.clone(), delta.clone()),
            _ => Err(Error::InvalidParameter("sidecar lacks v, delta or m".into())),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 0.3, 1.0 / 3.0, 0.05, 0.95, 123.456, 1e-7, 2.5e20, -7.25, 0.0] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(!s.contains('e') || x.abs() > 1e16);
        }
        assert_eq!(fmt17(0.5), "0.50000000000000000");
    }

    #[test]
    fn design_csv_round_trip() {
        let x = LatticeSpec::new(7, vec![1, 3], vec![2, 5]).unwrap().points();
        let mut buf = Vec::new();
        write_design_csv(&mut buf, &x, Some(&metadata_line(3, "cfg"))).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# latticelhd"));
        assert!(text.lines().nth(1).unwrap() == "x1,x2");
        let back = read_design_csv(buf.as_slice()).unwrap();
        assert_eq!(back.as_slice(), x.as_slice());
    }

    #[test]
    fn rejects_ragged_and_non_numeric() {
        assert!(read_design_csv("x1,x2\n0.1,0.2\n0.3\n".as_bytes()).is_err());
        assert!(read_design_csv("x1\nabc\n".as_bytes()).is_err());
        assert!(read_design_csv("x1\n1.5\n".as_bytes()).is_err());
    }

    #[test]
    fn hash_is_git_style() {
        // sha256 of "blob 0\0"
        assert_eq!(
            content_hash(""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_ne!(content_hash("a"), content_hash("b"));
    }

    #[test]
    fn sidecar_round_trip() {
        let spec = LatticeSpec::new(12, vec![1, 5], vec![3, 4]).unwrap();
        let mut s = Sidecar::for_lattice("llhd", &spec);
        s.criterion = Some(CriterionKind::Wd);
        s.value = Some(0.25);
        s.seed = Some(9);
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"type\":\"llhd\""));
        assert!(text.contains("\"criterion\":\"WD\""));
        let back: Sidecar = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.lattice_spec().unwrap(), spec);
        let r = RlhdSpec::new(50, 18, vec![1, 7], vec![13, 12]).unwrap();
        assert_eq!(Sidecar::for_rlhd(&r).rlhd_spec().unwrap(), r);
    }
}

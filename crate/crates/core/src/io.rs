//! CSV artifacts. Every file opens with `#`-prefixed provenance lines
//! followed by a single header row; energies are meV with six decimals.

use std::io::{Read, Write};

use crate::fit::{Assignment, MeasuredLine, MeasuredPolarization};
use crate::model::{SectorLevels, Solution};
use crate::optics::{Polarization, Transition};
use crate::spectra::{PolarizationConfig, Spectrum};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Provenance {
    pub version: String,
    pub fingerprint: String,
    /// Additional `key=value` header entries, in file order.
    pub fields: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(fingerprint: impl Into<String>) -> Self {
        Provenance {
            version: VERSION.to_string(),
            fingerprint: fingerprint.into(),
            fields: Vec::new(),
        }
    }

    pub fn of(sol: &Solution) -> Self {
        Self::new(sol.fingerprint.clone())
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut s = format!("# qdot={}\n# fingerprint={}\n", self.version, self.fingerprint);
        for (k, v) in &self.fields {
            s.push_str(&format!("# {k}={v}\n"));
        }
        w.write_all(s.as_bytes()).map_err(|e| Error::io("<csv>", e))
    }

    fn parse(lines: &[&str]) -> Result<Self> {
        let mut p = Provenance::default();
        for line in lines {
            let body = line.trim_start_matches('#').trim();
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed header line {line:?}")))?;
            match k {
                "qdot" => p.version = v.to_string(),
                "fingerprint" => p.fingerprint = v.to_string(),
                _ => p.fields.push((k.to_string(), v.to_string())),
            }
        }
        Ok(p)
    }
}

pub fn format_energy(e: f64) -> String {
    format!("{e:.6}")
}

fn split_header<R: Read>(mut r: R) -> Result<(Provenance, String)> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| Error::io("<csv>", e))?;
    let mut header = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        header.push(line.trim_end());
        offset += line.len();
    }
    let prov = Provenance::parse(&header)?;
    Ok((prov, text[offset..].to_string()))
}

fn records(body: &str) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    rdr.records().map(|r| r.map_err(Error::from)).collect()
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| Error::Config(format!("missing column {name}")))
}

fn number(rec: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
    let s = field(rec, i, name)?;
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("column {name}: not a number: {s:?}")))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn finish<W: Write>(mut wtr: csv::Writer<W>) -> Result<()> {
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub sector: String,
    pub index: usize,
    pub energy: f64,
    pub label: String,
    pub purity: f64,
}

pub fn level_rows(levels: &SectorLevels) -> Vec<LevelRow> {
    levels
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| LevelRow {
            sector: s.state.sector.name().to_string(),
            index: i,
            energy: s.energy(),
            label: s.key(),
            purity: s.state.purity,
        })
        .collect()
}

pub fn write_levels<W: Write>(mut w: W, prov: &Provenance, rows: &[LevelRow]) -> Result<()> {
    prov.write(&mut w)?;
    let mut wtr = writer(w);
    wtr.write_record(["sector", "index", "energy_meV", "label", "purity"])?;
    for r in rows {
        wtr.write_record([
            r.sector.clone(),
            r.index.to_string(),
            format_energy(r.energy),
            r.label.clone(),
            format!("{:.6}", r.purity),
        ])?;
    }
    finish(wtr)
}

pub fn read_levels<R: Read>(r: R) -> Result<(Provenance, Vec<LevelRow>)> {
    let (prov, body) = split_header(r)?;
    let rows = records(&body)?
        .iter()
        .map(|rec| {
            Ok(LevelRow {
                sector: field(rec, 0, "sector")?.to_string(),
                index: field(rec, 1, "index")?
                    .parse()
                    .map_err(|_| Error::Config("column index: not an integer".into()))?,
                energy: number(rec, 2, "energy_meV")?,
                label: field(rec, 3, "label")?.to_string(),
                purity: number(rec, 4, "purity")?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((prov, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogRow {
    pub initial_label: String,
    pub final_label: String,
    pub energy: f64,
    pub polarization: Polarization,
    pub strength: f64,
}

impl From<&Transition> for CatalogRow {
    fn from(t: &Transition) -> Self {
        CatalogRow {
            initial_label: t.initial.clone(),
            final_label: t.final_state.clone(),
            energy: t.energy,
            polarization: t.polarization,
            strength: t.strength,
        }
    }
}

pub fn write_catalog<W: Write>(mut w: W, prov: &Provenance, lines: &[Transition]) -> Result<()> {
    prov.write(&mut w)?;
    let mut wtr = writer(w);
    wtr.write_record(["initial_label", "final_label", "energy_meV", "polarization", "strength"])?;
    for t in lines {
        wtr.write_record([
            t.initial.clone(),
            t.final_state.clone(),
            format_energy(t.energy),
            t.polarization.as_str().to_string(),
            format!("{:e}", t.strength),
        ])?;
    }
    finish(wtr)
}

pub fn read_catalog<R: Read>(r: R) -> Result<(Provenance, Vec<CatalogRow>)> {
    let (prov, body) = split_header(r)?;
    let rows = records(&body)?
        .iter()
        .map(|rec| {
            Ok(CatalogRow {
                initial_label: field(rec, 0, "initial_label")?.to_string(),
                final_label: field(rec, 1, "final_label")?.to_string(),
                energy: number(rec, 2, "energy_meV")?,
                polarization: Polarization::parse(field(rec, 3, "polarization")?)?,
                strength: number(rec, 4, "strength")?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((prov, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    pub provenance: Provenance,
    pub config: Option<PolarizationConfig>,
    pub monitored_line: Option<String>,
    pub energies: Vec<f64>,
    pub intensities: Vec<f64>,
}

pub fn write_spectrum<W: Write>(w: W, prov: &Provenance, s: &Spectrum) -> Result<()> {
    let mut prov = prov.clone();
    if let Some(c) = s.config {
        prov = prov.with("config", c.to_string());
    }
    if let Some(m) = &s.monitored_line {
        prov = prov.with("monitor", m.clone());
    }
    let mut w = w;
    prov.write(&mut w)?;
    let mut wtr = writer(w);
    wtr.write_record(["energy_meV", "intensity"])?;
    for (e, i) in s.energies.iter().zip(&s.intensities) {
        wtr.write_record([format_energy(*e), format!("{i:e}")])?;
    }
    finish(wtr)
}

pub fn read_spectrum<R: Read>(r: R) -> Result<SpectrumFile> {
    let (prov, body) = split_header(r)?;
    let config = prov.get("config").map(str::parse).transpose()?;
    let monitored_line = prov.get("monitor").map(str::to_string);
    let mut energies = Vec::new();
    let mut intensities = Vec::new();
    for rec in records(&body)? {
        energies.push(number(&rec, 0, "energy_meV")?);
        intensities.push(number(&rec, 1, "intensity")?);
    }
    Ok(SpectrumFile {
        provenance: prov,
        config,
        monitored_line,
        energies,
        intensities,
    })
}

/// Filesystem-safe rendering of a state or line label.
pub fn sanitize(label: &str) -> String {
    let mut out = String::new();
    for c in label.replace("->", " to ").chars() {
        let piece = match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' => c.to_string(),
            '+' => "p".into(),
            '-' | '−' => "m".into(),
            '±' => "pm".into(),
            '¹' => "1".into(),
            '²' => "2".into(),
            _ => "_".into(),
        };
        if piece == "_" && (out.is_empty() || out.ends_with('_')) {
            continue;
        }
        out.push_str(&piece);
    }
    out.trim_end_matches('_').to_string()
}

/// `ple_<monitor>_<XY(Z)>.csv` for PLE, `pl_<XY(Z)>.csv` for PL.
pub fn spectrum_file_name(config: &PolarizationConfig, monitor: Option<&str>) -> String {
    match monitor {
        Some(m) => format!("ple_{}_{config}.csv", sanitize(m)),
        None => format!("pl_{config}.csv"),
    }
}

const ASSIGNMENT_COLUMNS: [&str; 7] = [
    "measured_index",
    "measured_energy_meV",
    "measured_polarization",
    "line",
    "model_energy_meV",
    "residual_meV",
    "hint",
];

pub fn write_assignment<W: Write>(mut w: W, prov: &Provenance, measured: &[MeasuredLine], a: &Assignment) -> Result<()> {
    prov.write(&mut w)?;
    let mut wtr = writer(w);
    wtr.write_record(ASSIGNMENT_COLUMNS)?;
    for (i, m) in measured.iter().enumerate() {
        let hit = a.matches.iter().find(|x| x.measured == i);
        wtr.write_record([
            i.to_string(),
            format_energy(m.energy),
            m.polarization.to_string(),
            hit.map(|h| h.line.clone()).unwrap_or_default(),
            hit.map(|h| format_energy(h.model_energy)).unwrap_or_default(),
            hit.map(|h| format_energy(h.residual)).unwrap_or_default(),
            m.hint.clone().unwrap_or_default(),
        ])?;
    }
    finish(wtr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentRow {
    pub measured_index: usize,
    pub measured_energy: f64,
    pub measured_polarization: MeasuredPolarization,
    /// `None` when the measured line found no partner.
    pub line: Option<(String, f64, f64)>,
    pub hint: Option<String>,
}

pub fn read_assignment<R: Read>(r: R) -> Result<(Provenance, Vec<AssignmentRow>)> {
    let (prov, body) = split_header(r)?;
    let rows = records(&body)?
        .iter()
        .map(|rec| {
            let line = field(rec, 3, "line")?;
            let hint = field(rec, 6, "hint")?;
            Ok(AssignmentRow {
                measured_index: field(rec, 0, "measured_index")?
                    .parse()
                    .map_err(|_| Error::Config("column measured_index: not an integer".into()))?,
                measured_energy: number(rec, 1, "measured_energy_meV")?,
                measured_polarization: MeasuredPolarization::parse(field(rec, 2, "measured_polarization")?)?,
                line: if line.is_empty() {
                    None
                } else {
                    Some((
                        line.to_string(),
                        number(rec, 4, "model_energy_meV")?,
                        number(rec, 5, "residual_meV")?,
                    ))
                },
                hint: (!hint.is_empty()).then(|| hint.to_string()),
            })
        })
        .collect::<Result<_>>()?;
    Ok((prov, rows))
}

pub fn write_measured<W: Write>(w: W, lines: &[MeasuredLine]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["energy_meV", "polarization", "weight", "hint"])?;
    for m in lines {
        wtr.write_record([
            format_energy(m.energy),
            m.polarization.to_string(),
            format!("{}", m.weight),
            m.hint.clone().unwrap_or_default(),
        ])?;
    }
    finish(wtr)
}

/// Columns after `energy_meV` are optional; weight defaults to 1.
pub fn read_measured<R: Read>(r: R) -> Result<Vec<MeasuredLine>> {
    let (_, body) = split_header(r)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let e_col = col("energy_meV").ok_or_else(|| Error::Config("measured lines need an energy_meV column".into()))?;
    let (p_col, w_col, h_col) = (col("polarization"), col("weight"), col("hint"));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut m = MeasuredLine::new(number(&rec, e_col, "energy_meV")?);
        if let Some(s) = p_col.and_then(|c| rec.get(c)) {
            m.polarization = MeasuredPolarization::parse(s)?;
        }
        if let Some(s) = w_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()) {
            m.weight = s
                .parse()
                .map_err(|_| Error::Config(format!("column weight: not a number: {s:?}")))?;
        }
        m.hint = h_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()).map(str::to_string);
        m.validate()?;
        out.push(m);
    }
    Ok(out)
}

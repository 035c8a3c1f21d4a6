//! Artifact writers: CSV tables tagged with a configuration hash, JSON
//! summaries, and the flat binary potential format.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::EstimateReport;
use crate::error::{Result, ScatterError};
use crate::grid::make_grid;
use crate::identities::IdentityReport;
use crate::potential::Potential;
use crate::radon::RadonProfile;
use crate::solver::AmplitudeTable;
use crate::spectral::SpectralField;

/// First 16 hex digits of the SHA-256 of the JSON encoding of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// CSV writer whose first line is `# config_hash=<hash>`.
pub struct CsvSink {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: &Path, hash: &str, header: &[&str]) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# config_hash={hash}")?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_amplitude_table(path: &Path, table: &AmplitudeTable, hash: &str) -> Result<()> {
    let mut sink = CsvSink::create(
        path,
        hash,
        &[
            "beta_x", "beta_y", "beta_z", "alpha_x", "alpha_y", "alpha_z", "re_k", "im_k", "re_a", "im_a",
        ],
    )?;
    for e in &table.entries {
        sink.row([
            e.beta[0], e.beta[1], e.beta[2], e.alpha[0], e.alpha[1], e.alpha[2], e.k.re, e.k.im,
            e.amplitude.re, e.amplitude.im,
        ]
        .map(num))?;
    }
    sink.finish()
}

pub fn write_radon_profile(path: &Path, profile: &RadonProfile, hash: &str) -> Result<()> {
    let mut sink = CsvSink::create(path, hash, &["lambda", "value"])?;
    for (l, v) in profile.lambdas.iter().zip(&profile.values) {
        sink.row([num(*l), num(*v)])?;
    }
    sink.finish()
}

pub fn write_identity_reports(path: &Path, reports: &[IdentityReport], hash: &str) -> Result<()> {
    let mut sink = CsvSink::create(
        path,
        hash,
        &[
            "identity", "k", "alpha_x", "alpha_y", "alpha_z", "beta_x", "beta_y", "beta_z", "grid_n", "re_lhs",
            "im_lhs", "re_rhs", "im_rhs", "abs_err", "rel_err", "potentials",
        ],
    )?;
    for r in reports {
        let c = &r.context;
        let mut fields = vec![c.identity.to_string()];
        fields.extend(
            [c.k, c.alpha[0], c.alpha[1], c.alpha[2], c.beta[0], c.beta[1], c.beta[2]].map(num),
        );
        fields.push(c.grid_n.to_string());
        fields.extend([r.lhs.re, r.lhs.im, r.rhs.re, r.rhs.im, r.abs_err, r.rel_err].map(num));
        fields.push(c.potentials.clone());
        sink.row(fields)?;
    }
    sink.finish()
}

/// One row per sweep point plus a JSON summary next to it (`<stem>.summary.json`).
pub fn write_estimate_report(path: &Path, report: &EstimateReport, hash: &str) -> Result<PathBuf> {
    let mut sink = CsvSink::create(path, hash, &["kappa", "eta", "measured", "bound_or_fit"])?;
    for p in &report.points {
        sink.row([p.kappa, p.eta, p.measured, p.bound].map(num))?;
    }
    sink.finish()?;
    let summary = path.with_extension("summary.json");
    write_json(&summary, &Tagged { config_hash: hash, body: report })?;
    Ok(summary)
}

/// The plane `xi[axis] = index * freq_spacing` of a dual-grid field.
pub fn write_spectral_slice(path: &Path, field: &SpectralField, axis: usize, index: i64, hash: &str) -> Result<()> {
    if axis > 2 {
        return Err(ScatterError::InvalidArgument(format!("axis must be 0, 1 or 2, got {axis}")));
    }
    let mut sink = CsvSink::create(path, hash, &["xi_x", "xi_y", "xi_z", "re", "im"])?;
    for idx in 0..field.values.len() {
        if field.signed(idx)[axis] != index {
            continue;
        }
        let xi = field.xi(idx);
        let v = field.values[idx];
        sink.row([xi[0], xi[1], xi[2], v.re, v.im].map(num))?;
    }
    sink.finish()
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| ScatterError::Config(format!("json encoding failed: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// Header of the binary potential format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialHeader {
    pub n: usize,
    pub a: f64,
    pub ell: u32,
    pub label: String,
    /// File holding `n^3` little-endian `f64` samples in grid order.
    pub data: String,
}

/// Write `<stem>.toml` and `<stem>.bin`; returns the header path.
pub fn export_potential(stem: &Path, q: &Potential) -> Result<PathBuf> {
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir)?;
    }
    let bin = stem.with_extension("bin");
    let header_path = stem.with_extension("toml");
    let header = PotentialHeader {
        n: q.domain.n(),
        a: q.domain.radius(),
        ell: q.smoothness_ell,
        label: q.label.clone(),
        data: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let mut w = BufWriter::new(File::create(&bin)?);
    for v in &q.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let text = toml::to_string(&header).map_err(|e| ScatterError::Config(e.to_string()))?;
    fs::write(&header_path, text)?;
    Ok(header_path)
}

/// Read a potential written by [`export_potential`]; the closed form is not
/// kept, so off-grid values come from interpolation.
pub fn import_potential(header_path: &Path) -> Result<Potential> {
    let text = fs::read_to_string(header_path)?;
    let header: PotentialHeader = toml::from_str(&text).map_err(|e| ScatterError::Config(e.to_string()))?;
    let domain = make_grid(header.a, header.n)?;
    let bin = header_path.with_file_name(&header.data);
    let mut bytes = Vec::new();
    BufReader::new(File::open(bin)?).read_to_end(&mut bytes)?;
    if bytes.len() != 8 * domain.num_nodes() {
        return Err(ScatterError::ShapeMismatch {
            expected: domain.num_nodes(),
            got: bytes.len() / 8,
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Potential::from_samples(&domain, values, header.ell, header.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::potential::bump_potential;

    #[derive(Serialize)]
    struct Cfg {
        n: usize,
        k: f64,
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&Cfg { n: 33, k: 5.0 });
        assert_eq!(a, config_hash(&Cfg { n: 33, k: 5.0 }));
        assert_ne!(a, config_hash(&Cfg { n: 33, k: 5.5 }));
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn potential_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = make_grid(1.0, 9).unwrap();
        let q = bump_potential(&d, 0.1, 0.6).unwrap();
        let header = export_potential(&dir.path().join("q"), &q).unwrap();
        let back = import_potential(&header).unwrap();
        assert_eq!(back.values, q.values);
        assert_eq!(back.domain, q.domain);
        assert_eq!(back.smoothness_ell, q.smoothness_ell);
        assert_eq!(back.label, q.label);
    }

    #[test]
    fn csv_carries_hash_line_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut s = CsvSink::create(&path, "abc", &["x", "y"]).unwrap();
        s.row(["1", "2"]).unwrap();
        s.finish().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["# config_hash=abc", "x,y", "1,2"]);
    }
}

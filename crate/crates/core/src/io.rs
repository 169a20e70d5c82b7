//! File formats: alist for single matrices, JSON containers for codes,
//! diagrams, merged codes and run artifacts.
//!
//! Matrices serialize as `{n_rows, n_cols, rows}` with sorted row supports, so
//! a write-read-write cycle is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeError, CssCode, DegreeProfile};
use crate::f2core::{BitMatrix, F2Error};
use crate::surgery::{MergedCode, SurgeryDiagram, SurgerySchedule};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("alist: {0}")]
    Alist(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    F2(#[from] F2Error),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("{0}")]
    Format(String),
}

pub type IoResult<T> = Result<T, IoError>;

pub fn read_text(path: &Path) -> IoResult<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> IoResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, text).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> IoResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> IoResult<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    write_text(path, &to_json(value)?)
}

/// Writes `m` in alist form: columns are variable nodes, rows are checks,
/// indices are 1-based and lists are zero-padded to the maximum weight.
pub fn write_alist(m: &BitMatrix) -> String {
    let (r, c) = m.shape();
    let cols = m.transpose();
    let (max_c, max_r) = (cols.max_row_weight(), m.max_row_weight());
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    let padded = |v: &[usize], w: usize| {
        let mut out: Vec<usize> = v.iter().map(|i| i + 1).collect();
        out.resize(w, 0);
        join(&out)
    };
    let mut s = String::new();
    let _ = writeln!(s, "{c} {r}");
    let _ = writeln!(s, "{max_c} {max_r}");
    let _ = writeln!(s, "{}", join(&cols.row_weights()));
    let _ = writeln!(s, "{}", join(&m.row_weights()));
    for j in 0..c {
        let _ = writeln!(s, "{}", padded(cols.row(j), max_c));
    }
    for i in 0..r {
        let _ = writeln!(s, "{}", padded(m.row(i), max_r));
    }
    s
}

/// Parses alist text; the column and row lists must describe the same matrix.
pub fn read_alist(text: &str) -> IoResult<BitMatrix> {
    // blank lines carry empty lists, so every line is positional
    let mut lines = text.lines().map(str::trim);
    let mut numbers = |what: &str| -> IoResult<Vec<usize>> {
        let line = lines.next().ok_or_else(|| IoError::Alist(format!("missing {what}")))?;
        line.split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| IoError::Alist(format!("bad number {t:?} in {what}"))))
            .collect()
    };
    let header = numbers("dimensions")?;
    let [c, r] = header[..] else {
        return Err(IoError::Alist("dimension line needs two numbers".into()));
    };
    let _max = numbers("maximum weights")?;
    let col_w = numbers("column weights")?;
    let row_w = numbers("row weights")?;
    if col_w.len() != c || row_w.len() != r {
        return Err(IoError::Alist("weight list lengths disagree with dimensions".into()));
    }
    let mut entries = |count: usize, bound: usize, weights: &[usize], what: &str| -> IoResult<Vec<Vec<usize>>> {
        (0..count)
            .map(|i| {
                let mut v: Vec<usize> = numbers(what)?.into_iter().filter(|&x| x != 0).map(|x| x - 1).collect();
                v.sort_unstable();
                if v.len() != weights[i] || v.iter().any(|&x| x >= bound) || v.windows(2).any(|w| w[0] == w[1]) {
                    return Err(IoError::Alist(format!("{what} {i} does not match its weight or range")));
                }
                Ok(v)
            })
            .collect()
    };
    let col_lists = entries(c, r, &col_w, "column")?;
    let row_lists = entries(r, c, &row_w, "row")?;
    let m = BitMatrix::new(r, c, row_lists)?;
    if m.transpose().rows() != col_lists.as_slice() {
        return Err(IoError::Alist("column lists disagree with row lists".into()));
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rows: Vec<Vec<usize>>,
}

impl From<&BitMatrix> for MatrixJson {
    fn from(m: &BitMatrix) -> Self {
        Self { n_rows: m.n_rows(), n_cols: m.n_cols(), rows: m.rows().to_vec() }
    }
}

impl TryFrom<&MatrixJson> for BitMatrix {
    type Error = IoError;

    fn try_from(m: &MatrixJson) -> IoResult<BitMatrix> {
        Ok(BitMatrix::new(m.n_rows, m.n_cols, m.rows.clone())?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeMeta {
    pub name: String,
    pub n: usize,
    pub k: usize,
    /// Known or estimated distance, when recorded.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeJson {
    pub hx: MatrixJson,
    pub hz: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lx: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lz: Option<MatrixJson>,
    pub meta: CodeMeta,
}

impl CodeJson {
    pub fn from_code(code: &CssCode, meta: CodeMeta) -> Self {
        Self {
            hx: (&code.hx).into(),
            hz: (&code.hz).into(),
            lx: Some((&code.lx).into()),
            lz: Some((&code.lz).into()),
            meta: CodeMeta { n: code.n(), k: code.k(), ..meta },
        }
    }

    /// Rebuilds the code; stored logicals are used when both are present.
    pub fn to_code(&self) -> IoResult<CssCode> {
        let hx = BitMatrix::try_from(&self.hx)?;
        let hz = BitMatrix::try_from(&self.hz)?;
        let code = match (&self.lx, &self.lz) {
            (Some(lx), Some(lz)) => CssCode::with_logicals(hx, hz, lx.try_into()?, lz.try_into()?)?,
            _ => CssCode::new(hx, hz)?,
        };
        if code.n() != self.meta.n || code.k() != self.meta.k {
            return Err(IoError::Format(format!(
                "meta says [[{}, {}]], matrices give [[{}, {}]]",
                self.meta.n,
                self.meta.k,
                code.n(),
                code.k()
            )));
        }
        Ok(code)
    }
}

pub fn read_code(path: &Path) -> IoResult<(CssCode, CodeMeta)> {
    let file: CodeJson = read_json(path)?;
    Ok((file.to_code()?, file.meta))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramJson {
    /// Where the data code came from; the code itself is embedded in `data`.
    pub data_ref: String,
    pub data: CodeJson,
    pub d1a: MatrixJson,
    pub d0a: MatrixJson,
    pub gamma1: MatrixJson,
    pub gamma0: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub schedule: Option<SurgerySchedule>,
}

impl DiagramJson {
    pub fn from_diagram(
        diag: &SurgeryDiagram,
        data_ref: &str,
        meta: CodeMeta,
        schedule: Option<SurgerySchedule>,
    ) -> Self {
        Self {
            data_ref: data_ref.to_string(),
            data: CodeJson::from_code(&diag.data, meta),
            d1a: (&diag.d1a).into(),
            d0a: (&diag.d0a).into(),
            gamma1: (&diag.gamma1).into(),
            gamma0: (&diag.gamma0).into(),
            schedule,
        }
    }

    pub fn to_diagram(&self) -> IoResult<SurgeryDiagram> {
        let diag = SurgeryDiagram {
            data: self.data.to_code()?,
            d1a: (&self.d1a).try_into()?,
            d0a: (&self.d0a).try_into()?,
            gamma1: (&self.gamma1).try_into()?,
            gamma0: (&self.gamma0).try_into()?,
        };
        diag.check_shapes().map_err(|e| IoError::Format(e.to_string()))?;
        Ok(diag)
    }
}

/// Merged code on qubits ordered `[A_0 | C_1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergedJson {
    #[serde(flatten)]
    pub diagram: DiagramJson,
    pub stabilizer_x: MatrixJson,
    pub stabilizer_z: MatrixJson,
    pub gauge_x: MatrixJson,
    pub gauge_z: MatrixJson,
    pub bare_lx: MatrixJson,
    pub bare_lz: MatrixJson,
    /// Measured space over the data qubits, and its logical classes.
    pub measured: MatrixJson,
    pub measured_logical: MatrixJson,
    pub ier: f64,
    pub degree_profile: DegreeProfile,
}

impl MergedJson {
    pub fn new(diagram: DiagramJson, merged: &MergedCode) -> Self {
        let c = &merged.code;
        Self {
            diagram,
            stabilizer_x: (&c.stabilizer_x).into(),
            stabilizer_z: (&c.stabilizer_z).into(),
            gauge_x: (&c.gauge_x).into(),
            gauge_z: (&c.gauge_z).into(),
            bare_lx: (&c.bare_lx).into(),
            bare_lz: (&c.bare_lz).into(),
            measured: (&merged.measured).into(),
            measured_logical: (&merged.measured_logical).into(),
            ier: merged.ier,
            degree_profile: merged.degree_profile,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{hamming, hgp};
    use crate::surgery::{merge, transversal_ancilla};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alist_layout() {
        let h = hamming(3).h;
        let text = write_alist(&h);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("7 3"));
        assert_eq!(read_alist(&text).unwrap(), h);
        assert_eq!(write_alist(&read_alist(&text).unwrap()), text);
    }

    #[test]
    fn alist_rejects_inconsistent_lists() {
        let text = "2 1\n1 2\n1 1\n2\n1\n2\n1 1\n";
        assert!(read_alist(text).is_err());
        assert!(read_alist("3\n").is_err());
    }

    #[test]
    fn merged_json_round_trip() {
        let code = hgp(&hamming(3), &hamming(3).transpose());
        let diag = transversal_ancilla(&code, code.lx.row(0));
        let merged = merge(&diag).unwrap();
        let meta = CodeMeta { name: "hgp".into(), ..Default::default() };
        let file = MergedJson::new(DiagramJson::from_diagram(&diag, "inline", meta, None), &merged);
        let text = to_json(&file).unwrap();
        let back: MergedJson = serde_json::from_str(&text).unwrap();
        assert_eq!(to_json(&back).unwrap(), text);
        assert_eq!(back.diagram.to_diagram().unwrap(), diag);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn alist_and_json_round_trip(r in 0usize..8, c in 1usize..12, density in 0.0f64..1.0, seed in any::<u64>()) {
            let m = BitMatrix::random(r, c, density, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(&read_alist(&write_alist(&m)).unwrap(), &m);
            let j = to_json(&MatrixJson::from(&m)).unwrap();
            let back: MatrixJson = serde_json::from_str(&j).unwrap();
            prop_assert_eq!(&BitMatrix::try_from(&back).unwrap(), &m);
        }
    }
}

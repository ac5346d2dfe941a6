//! Table formats: CSV with a `#` header block, and JSON carrying the same
//! header and rows. Floats go to CSV with 17 significant digits, so a
//! CSV -> JSON -> CSV round trip reproduces the bytes.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kostin::{NumericSolution, SolverConfig};
use crate::problem::{PhysicalConstants, ScatteringProblem, SquareWell};
use crate::scan::{SweepRow, SweepSpec};

pub const VERSION: &str = concat!("rtscatter ", env!("CARGO_PKG_VERSION"));

pub const DISSIPATION_CONVENTION: &str =
    "nu acts only inside the well (0 < x < L); plane waves outside";

pub const SWEEP_COLUMNS: [&str; 8] = [
    "energy",
    "nu",
    "t2_analytic",
    "t2_closed_form",
    "t2_numeric",
    "r2_numeric",
    "resonance_order",
    "error",
];

pub const PROFILE_COLUMNS: [&str; 6] = ["x", "re_phi", "im_phi", "rho", "s", "invariant"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Ordered `key: value` metadata written ahead of every table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        let mut h = Self::default();
        h.push("version", VERSION);
        h
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn physics(&mut self, well: &SquareWell, constants: &PhysicalConstants) {
        self.push("depth", well.depth());
        self.push("width", well.width());
        self.push("hbar", constants.hbar());
        self.push("mass", constants.mass());
        let units = if *constants == PhysicalConstants::natural() {
            "natural (hbar = m = 1)".to_string()
        } else {
            "consistent user units".to_string()
        };
        self.push("units", units);
        self.push("dissipation", DISSIPATION_CONVENTION);
    }

    fn solver(&mut self, cfg: &SolverConfig) {
        self.push(
            "solver",
            format!(
                "rk4 step = {}, newton_tol = {}, max_newton_iters = {}",
                cfg.step, cfg.newton_tol, cfg.max_newton_iters
            ),
        );
    }

    pub fn for_sweep(spec: &SweepSpec, cfg: &SolverConfig) -> Self {
        let mut h = Self::new();
        h.push("table", "sweep");
        h.physics(&spec.well, &spec.constants);
        let e = &spec.energies;
        h.push(
            "energies",
            format!("{} points on [{}, {}]", e.len(), e[0], e[e.len() - 1]),
        );
        let nus: Vec<String> = spec.nu_values.iter().map(f64::to_string).collect();
        h.push("nu_values", nus.join(" "));
        h.push("methods", spec.methods.names().join(" "));
        if spec.methods.numeric {
            h.push("numeric_method", "complex_field");
        }
        h.solver(cfg);
        h
    }

    pub fn for_problem(problem: &ScatteringProblem, cfg: &SolverConfig) -> Self {
        let mut h = Self::new();
        h.push("table", "profile");
        h.physics(&problem.well(), &problem.constants());
        h.push("energy", problem.energy());
        h.push("nu", problem.nu());
        h.solver(cfg);
        h
    }
}

impl Serialize for Header {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (k, v) in &self.entries {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Header {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Ordered;
        impl<'de> Visitor<'de> for Ordered {
            type Value = Header;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of header strings")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut a: A) -> std::result::Result<Header, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = a.next_entry::<String, String>()? {
                    entries.push((k, v));
                }
                Ok(Header { entries })
            }
        }
        d.deserialize_map(Ordered)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub header: Header,
    pub rows: Vec<SweepRow>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn comment_block(out: &mut Vec<u8>, header: &Header) {
    for (k, v) in &header.entries {
        // keep each entry on one comment line
        let v = v.replace(['\n', '\r'], " ");
        writeln!(out, "# {k}: {v}").expect("write to Vec");
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        comment_block(&mut out, &self.header);
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record([
                    num(r.energy),
                    num(r.nu),
                    opt(r.t2_analytic),
                    opt(r.t2_closed_form),
                    opt(r.t2_numeric),
                    opt(r.r2_numeric),
                    r.resonance_order.map(|o| o.to_string()).unwrap_or_default(),
                    r.error.clone().unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Format(e.to_string()))?;
        }
        String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (header, body) = split_comments(text)?;
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let cols = rdr.headers().map_err(csv_err)?;
        if cols.iter().ne(SWEEP_COLUMNS) {
            return Err(Error::Format(format!(
                "expected columns {}, found {}",
                SWEEP_COLUMNS.join(","),
                cols.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let f = |i: usize| -> Result<Option<f64>> {
                let s = &rec[i];
                if s.is_empty() {
                    return Ok(None);
                }
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Format(format!("bad number '{s}' in column {}", SWEEP_COLUMNS[i])))
            };
            let required = |i: usize| -> Result<f64> {
                f(i)?.ok_or_else(|| Error::Format(format!("missing {}", SWEEP_COLUMNS[i])))
            };
            let order = match &rec[6] {
                "" => None,
                s => Some(s.parse().map_err(|_| Error::Format(format!("bad order '{s}'")))?),
            };
            rows.push(SweepRow {
                energy: required(0)?,
                nu: required(1)?,
                t2_analytic: f(2)?,
                t2_closed_form: f(3)?,
                t2_numeric: f(4)?,
                r2_numeric: f(5)?,
                resonance_order: order,
                error: (!rec[7].is_empty()).then(|| rec[7].to_string()),
            });
        }
        Ok(Self { header, rows })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Parse either format, chosen by the first non-blank character.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_csv(text)
        }
    }
}

fn split_comments(text: &str) -> Result<(Header, &str)> {
    let mut header = Header::default();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix("# ") {
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| Error::Format(format!("bad header line '# {line}'")))?;
        header.entries.push((k.to_string(), v.to_string()));
        rest = tail;
    }
    Ok((header, rest))
}

/// Interior profile: `x, re_phi, im_phi, rho, s, invariant`.
pub fn profile_csv(header: &Header, sol: &NumericSolution) -> Result<String> {
    let f = &sol.fields;
    let rows = (0..f.len()).map(|i| {
        [
            f.grid[i],
            sol.field[i].re,
            sol.field[i].im,
            f.rho[i],
            f.phase[i],
            f.invariant[i],
        ]
    });
    numeric_csv(header, &PROFILE_COLUMNS, rows)
}

/// Per-point conservation residual `|J(x) - J(0)| / |J(0)|` with
/// `J = I - (2mν/ħ)(Sρ - Cx)`, as `x, conservation_residual`.
pub fn conservation_csv(header: &Header, sol: &NumericSolution, dissipation_coeff: f64) -> Result<String> {
    let j = sol.fields.conserved_combination(dissipation_coeff);
    let j0 = j[0];
    let rows = sol
        .fields
        .grid
        .iter()
        .zip(&j)
        .map(|(&x, &v)| [x, (v - j0).abs() / j0.abs()]);
    numeric_csv(header, &["x", "conservation_residual"], rows)
}

fn numeric_csv<const N: usize>(
    header: &Header,
    columns: &[&str],
    rows: impl Iterator<Item = [f64; N]>,
) -> Result<String> {
    let mut out = Vec::new();
    comment_block(&mut out, header);
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns).map_err(csv_err)?;
        for r in rows {
            w.write_record(r.iter().map(|&v| num(v))).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kostin::solve_hydrodynamic;
    use crate::scan::{sweep, MethodSet};
    use proptest::prelude::*;

    fn table() -> SweepTable {
        let spec = SweepSpec {
            well: SquareWell::new(25.0, 1.0).unwrap(),
            constants: PhysicalConstants::natural(),
            energies: SweepSpec::linspace(18.0, 21.0, 7),
            nu_values: vec![0.0, 1e-3],
            methods: MethodSet::ALL,
        };
        let cfg = SolverConfig::for_width(1.0);
        let mut rows = sweep(&spec, &cfg).unwrap();
        rows[3].error = Some("numeric: synthetic, with \"quotes\", commas".into());
        SweepTable {
            header: Header::for_sweep(&spec, &cfg),
            rows,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = table().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# version: rtscatter "));
        assert!(csv.contains("# dissipation: nu acts only inside the well"));
        assert!(csv.contains("# units: natural"));
        let col_line = lines.iter().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(*col_line, SWEEP_COLUMNS.join(","));
        // 17 significant digits
        let first_row = lines.iter().filter(|l| !l.starts_with('#')).nth(1).unwrap();
        let energy = first_row.split(',').next().unwrap();
        assert_eq!(energy, "1.8000000000000000e1");
    }

    #[test]
    fn csv_json_round_trip_is_lossless() {
        let t = table();
        let csv = t.to_csv().unwrap();
        let back = SweepTable::parse(&csv).unwrap();
        assert_eq!(back, t);
        let json = back.to_json().unwrap();
        let again = SweepTable::parse(&json).unwrap();
        assert_eq!(again, t);
        assert_eq!(again.to_csv().unwrap(), csv);
        assert_eq!(SweepTable::parse(&again.to_csv().unwrap()).unwrap().to_json().unwrap(), json);
    }

    #[test]
    fn json_rows_share_keys() {
        let json = table().to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let rows = v["rows"].as_array().unwrap();
        for r in rows {
            let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
            let mut expected = SWEEP_COLUMNS.to_vec();
            expected.sort();
            let mut keys = keys;
            keys.sort();
            assert_eq!(keys, expected);
        }
        assert_eq!(v["header"]["table"], "sweep");
    }

    #[test]
    fn rejects_wrong_columns() {
        assert!(SweepTable::from_csv("# version: x\nenergy,nu\n1,2\n").is_err());
        assert!(SweepTable::from_csv("#bad\n").is_err());
    }

    #[test]
    fn profile_columns_and_conservation() {
        let p = ScatteringProblem::natural(2.5, 1.0, 2.0, 1e-3).unwrap();
        let cfg = SolverConfig::for_width(1.0);
        let sol = solve_hydrodynamic(&p, &cfg).unwrap();
        let h = Header::for_problem(&p, &cfg);
        let csv = profile_csv(&h, &sol).unwrap();
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "x,re_phi,im_phi,rho,s,invariant");
        assert_eq!(body.len(), sol.fields.len() + 1);
        let cons = conservation_csv(&h, &sol, p.dissipation_coeff()).unwrap();
        for line in cons.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let r: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(r <= 1e-6);
        }
    }

    #[test]
    fn io_errors_carry_the_path() {
        let p = Path::new("/nonexistent-dir/out.csv");
        match write_file(p, "x") {
            Err(Error::Io { path, .. }) => assert_eq!(path, p),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = num(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}

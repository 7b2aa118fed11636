//! CSV and JSON artifacts. Floats are written with 17 significant digits so
//! every value round-trips bitwise.

use std::fmt::Write as _;
use std::path::Path;

use arcscat_core::forward::FarFieldSet;
use arcscat_core::geometry::{ChebCrack, Crack, Point2};
use arcscat_core::inversion::ReconstructionState;
use arcscat_core::sampling::IndicatorGrid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ChebSpec;
use crate::error::CliError;

pub const ARTIFACT: &str = concat!("arcscat ", env!("CARGO_PKG_VERSION"));

pub const FARFIELD_HEADER: &str = "k,d_x,d_y,xhat_x,xhat_y,re,im,delta,seed";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// First line of every CSV and script artifact.
pub fn banner(config_hash: &str) -> String {
    format!("# {ARTIFACT} config-sha256={config_hash}\n")
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn farfield_csv(set: &FarFieldSet, config_hash: &str) -> String {
    let mut out = banner(config_hash);
    out.push_str(FARFIELD_HEADER);
    out.push('\n');
    let seed = set.seed.map(|s| s.to_string()).unwrap_or_default();
    for (xh, u) in set.directions.iter().zip(&set.values) {
        let row = [set.k, set.d.x, set.d.y, xh.x, xh.y, u.re, u.im, set.delta].map(num).join(",");
        writeln!(out, "{row},{seed}").unwrap();
    }
    out
}

pub fn parse_farfield_csv(text: &str) -> Result<FarFieldSet, CliError> {
    let schema = |msg: String| CliError::Schema(msg);
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == FARFIELD_HEADER => {}
        other => return Err(schema(format!("expected header `{FARFIELD_HEADER}`, found {other:?}"))),
    }
    let mut set: Option<FarFieldSet> = None;
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(schema(format!("row {row}: expected 9 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 8];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| schema(format!("row {row}: `{f}` is not a number")))?;
        }
        let seed = match fields[8] {
            "" => None,
            s => Some(s.parse().map_err(|_| schema(format!("row {row}: bad seed `{s}`")))?),
        };
        let [k, dx, dy, xx, xy, re, im, delta] = v;
        let s = set.get_or_insert_with(|| FarFieldSet {
            k,
            d: Point2::new(dx, dy),
            directions: Vec::new(),
            values: Vec::new(),
            delta,
            seed,
        });
        if s.k != k || s.d != Point2::new(dx, dy) || s.delta != delta || s.seed != seed {
            return Err(schema(format!("row {row}: k, d, delta and seed must be constant within a file")));
        }
        s.directions.push(Point2::new(xx, xy));
        s.values.push(Complex64::new(re, im));
    }
    set.ok_or_else(|| schema("far-field file has no rows".into()))
}

pub fn read_farfield(path: &Path) -> Result<FarFieldSet, CliError> {
    parse_farfield_csv(&read(path)?).map_err(|e| match e {
        CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub k: f64,
    pub d: [f64; 2],
    pub delta: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

/// Reconstruction JSON; also used for initial guesses from the indicator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDoc {
    pub artifact: String,
    pub config_sha256: String,
    pub j_r: Option<f64>,
    pub p: usize,
    pub stage: usize,
    pub horizontal_frozen: bool,
    pub target_missed: bool,
    pub shortage: bool,
    pub cracks: Vec<ChebSpec>,
}

impl ReconstructionDoc {
    pub fn from_state(state: &ReconstructionState, config_hash: &str) -> Self {
        ReconstructionDoc {
            artifact: ARTIFACT.into(),
            config_sha256: config_hash.into(),
            j_r: state.j_r.is_finite().then_some(state.j_r),
            p: state.p,
            stage: state.stage,
            horizontal_frozen: state.horizontal_frozen,
            target_missed: state.target_missed,
            shortage: false,
            cracks: state.cracks.iter().map(ChebSpec::from).collect(),
        }
    }

    pub fn from_extraction(cracks: &[ChebCrack], shortage: bool, config_hash: &str) -> Self {
        ReconstructionDoc {
            artifact: ARTIFACT.into(),
            config_sha256: config_hash.into(),
            j_r: None,
            p: 0,
            stage: 0,
            horizontal_frozen: false,
            target_missed: false,
            shortage,
            cracks: cracks.iter().map(ChebSpec::from).collect(),
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

/// 201 points per crack on `s` in `[-0.999, 0.999]`.
pub fn polyline_csv(cracks: &[ChebCrack], config_hash: &str) -> String {
    let mut out = banner(config_hash);
    out.push_str("crack,s,x,y\n");
    for (i, c) in cracks.iter().enumerate() {
        let crack = Crack::from(c.clone());
        for j in 0..201 {
            let s = -0.999 + 1.998 * j as f64 / 200.0;
            let p = crack.point_and_derivative(s).0;
            writeln!(out, "{i},{},{},{}", num(s), num(p.x), num(p.y)).unwrap();
        }
    }
    out
}

pub fn iteration_log_csv(state: &ReconstructionState, config_hash: &str) -> String {
    let mut out = banner(config_hash);
    out.push_str("stage_k,p,iter,J_r,step_norm,damped\n");
    for r in &state.history {
        writeln!(out, "{},{},{},{},{},{}", num(r.stage_k), r.p, r.iter, num(r.j_r), num(r.step_norm), r.halvings).unwrap();
    }
    out
}

pub fn indicator_csv(grid: &IndicatorGrid, config_hash: &str) -> String {
    let mut out = banner(config_hash);
    out.push_str("x,y,I\n");
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let p = grid.point(ix, iy);
            writeln!(out, "{},{},{}", num(p.x), num(p.y), num(grid.value(ix, iy))).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Heat-map script for a blank-line separated `x,y,value` grid.
pub fn gnuplot_script(csv_name: &str, title: &str, config_hash: &str) -> String {
    let png = csv_name.trim_end_matches(".csv");
    format!(
        "{}set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnheader\nset key off\nset size ratio -1\n\
         set title '{title}'\nset view map\nset terminal pngcairo size 800,800\nset output '{png}.png'\n\
         splot '{csv_name}' using 1:2:3 with pm3d\n",
        banner(config_hash)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use arcscat_core::forward::observation_directions;

    fn sample_set() -> FarFieldSet {
        let directions = observation_directions(4);
        let values = (0..4).map(|i| Complex64::new(0.1 * i as f64 + 1.0 / 3.0, -f64::EPSILON * i as f64)).collect();
        FarFieldSet { k: 3.0, d: Point2::new(1.0, 0.0), directions, values, delta: 0.0, seed: Some(7) }
    }

    #[test]
    fn farfield_round_trips_bitwise() {
        let set = sample_set();
        let back = parse_farfield_csv(&farfield_csv(&set, "abc")).unwrap();
        assert_eq!(back, set);
        let none = FarFieldSet { seed: None, ..set };
        assert_eq!(parse_farfield_csv(&farfield_csv(&none, "abc")).unwrap(), none);
    }

    #[test]
    fn farfield_rejects_bad_schema() {
        assert!(parse_farfield_csv("k,d_x\n1,2\n").is_err());
        let text = farfield_csv(&sample_set(), "abc").replacen("3.0000000000000000e0,1", "3.5000000000000000e0,1", 1);
        assert!(matches!(parse_farfield_csv(&text), Err(CliError::Schema(_))));
        assert!(parse_farfield_csv(&format!("{FARFIELD_HEADER}\n")).is_err());
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        for x in [1.0 / 3.0, -2.5e-300, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn polyline_has_201_points_per_crack() {
        let text = polyline_csv(&[ChebCrack::segment(0.0, 1.0, 0.5)], "h");
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows.len(), 201);
        assert!(rows[0].starts_with("0,-9.9900000000000000e-1"));
        assert!(text.starts_with("# arcscat "));
    }
}

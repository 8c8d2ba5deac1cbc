//! Metasurface tile behaviour: measured coefficient tables, per-tile
//! operating modes, and the supercell phase-gradient designer for anomalous
//! reflection.
//!
//! Coefficient tables ship as versioned CSV assets embedded in the binary;
//! `CoeffTable::load_default` honours the `HSF_SIM_DATA_DIR` environment
//! variable so alternative measurements can be swapped in without a rebuild.
//! Angles at the public API are radians; the CSV assets store degrees.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-cell pitch of the reference tile hardware, metres.
pub const DEFAULT_CELL_PITCH_M: f64 = 0.001;

const ABSORPTION_CSV: &str = include_str!("../data/hsf_absorption_v1.csv");
const REFLECTION_CSV: &str = include_str!("../data/hsf_reflection_v1.csv");
const ABSORPTION_HEADER: &str = "theta_i_deg,alpha_abs_db";
const REFLECTION_HEADER: &str = "theta_i_deg,theta_r_deg,n_m,alpha_ref_db,reflected_power_pct";

/// Node snap tolerance for table lookups, degrees.
const NODE_EPS: f64 = 1e-9;

/// Operating mode of one wall tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TileMode {
    /// Steer incident energy toward the configured departure direction,
    /// given in the tile's local frame (`theta_r` from the tile normal,
    /// `azimuth` around it). Radians.
    Reflect { theta_r: f64, azimuth: f64 },
    /// Sink incident energy; only the residual table leakage survives.
    Absorb,
    /// Unpowered tile: contributes nothing to the channel.
    Inert,
}

/// Full per-tile configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileConfig {
    pub mode: TileMode,
    /// Reflect tiles re-collimate the beam: spreading loss stops accruing
    /// once the wavefront reaches the first collimating tile of a chain.
    pub collimate: bool,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            mode: TileMode::Absorb,
            collimate: true,
        }
    }
}

/// How out-of-domain angles are treated during table lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleLookup {
    /// Reject angles outside the measured domain.
    Strict,
    /// Clamp angles onto the measured domain before interpolating. Scene
    /// simulation uses this: real rooms produce incidences the bench
    /// measurements never swept.
    Clamp,
}

/// One absorption measurement: incidence angle vs residual amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionRow {
    pub theta_i_deg: f64,
    pub alpha_db: f64,
}

/// One anomalous-reflection measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionRow {
    pub theta_i_deg: f64,
    pub theta_r_deg: f64,
    pub n_cells: u32,
    pub alpha_db: f64,
    pub reflected_power_pct: f64,
}

/// Parsed coefficient tables plus interpolating lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    absorption: Vec<AbsorptionRow>,
    reflection: Vec<ReflectionRow>,
}

impl CoeffTable {
    /// Tables embedded at build time.
    pub fn builtin() -> &'static CoeffTable {
        static TABLE: OnceLock<CoeffTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            CoeffTable::from_csv(ABSORPTION_CSV, REFLECTION_CSV)
                .expect("embedded coefficient tables are valid")
        })
    }

    /// Embedded tables, unless `HSF_SIM_DATA_DIR` points at a directory
    /// containing `hsf_absorption_v1.csv` and `hsf_reflection_v1.csv`.
    pub fn load_default() -> Result<CoeffTable> {
        match std::env::var_os("HSF_SIM_DATA_DIR") {
            Some(dir) => CoeffTable::load_dir(Path::new(&dir)),
            None => Ok(CoeffTable::builtin().clone()),
        }
    }

    /// Load both CSV assets from a directory.
    pub fn load_dir(dir: &Path) -> Result<CoeffTable> {
        let abs = std::fs::read_to_string(dir.join("hsf_absorption_v1.csv"))?;
        let refl = std::fs::read_to_string(dir.join("hsf_reflection_v1.csv"))?;
        CoeffTable::from_csv(&abs, &refl)
    }

    /// Parse and validate both tables from CSV text.
    pub fn from_csv(absorption_csv: &str, reflection_csv: &str) -> Result<CoeffTable> {
        let absorption = parse_absorption(absorption_csv)?;
        let reflection = parse_reflection(reflection_csv)?;
        Ok(CoeffTable {
            absorption,
            reflection,
        })
    }

    pub fn absorption_rows(&self) -> &[AbsorptionRow] {
        &self.absorption
    }

    pub fn reflection_rows(&self) -> &[ReflectionRow] {
        &self.reflection
    }

    /// Residual amplitude of an absorb-mode tile, dB, at incidence
    /// `theta_i` radians. Linear interpolation in dB between measured
    /// angles.
    pub fn absorption_db(&self, theta_i: f64, lookup: AngleLookup) -> Result<f64> {
        let mut deg = theta_i.to_degrees();
        let min = self
            .absorption
            .first()
            .expect("validated nonempty")
            .theta_i_deg;
        let max = self
            .absorption
            .last()
            .expect("validated nonempty")
            .theta_i_deg;
        match lookup {
            AngleLookup::Clamp => deg = deg.clamp(min, max),
            AngleLookup::Strict => {
                if deg < min - NODE_EPS || deg > max + NODE_EPS {
                    return Err(Error::AngleOutOfTable {
                        context: "absorption incidence angle",
                        value: deg,
                        min,
                        max,
                    });
                }
                deg = deg.clamp(min, max);
            }
        }
        Ok(interp_nodes(
            self.absorption.iter().map(|r| (r.theta_i_deg, r.alpha_db)),
            deg,
        ))
    }

    /// Amplitude of a reflect-mode tile, dB, for incidence `theta_i` and
    /// departure `theta_r` radians.
    ///
    /// Within one measured incidence row the table interpolates linearly in
    /// the departure angle; between incidence rows it interpolates linearly
    /// again. Where a bracketing row does not span the requested departure
    /// angle, the row that does covers the lookup alone; if neither does,
    /// the nearest incidence row that spans it is used.
    pub fn reflection_db(&self, theta_i: f64, theta_r: f64, lookup: AngleLookup) -> Result<f64> {
        let groups = self.reflection_groups();
        let (ti_min, ti_max) = (
            groups.first().expect("validated nonempty").0,
            groups.last().expect("validated nonempty").0,
        );
        let tr_min = self
            .reflection
            .iter()
            .map(|r| r.theta_r_deg)
            .fold(f64::INFINITY, f64::min);
        let tr_max = self
            .reflection
            .iter()
            .map(|r| r.theta_r_deg)
            .fold(f64::NEG_INFINITY, f64::max);

        let mut ti = theta_i.to_degrees();
        let mut tr = theta_r.to_degrees();
        match lookup {
            AngleLookup::Clamp => {
                ti = ti.clamp(ti_min, ti_max);
                tr = tr.clamp(tr_min, tr_max);
            }
            AngleLookup::Strict => {
                if ti < ti_min - NODE_EPS || ti > ti_max + NODE_EPS {
                    return Err(Error::AngleOutOfTable {
                        context: "reflection incidence angle",
                        value: ti,
                        min: ti_min,
                        max: ti_max,
                    });
                }
                if tr < tr_min - NODE_EPS || tr > tr_max + NODE_EPS {
                    return Err(Error::AngleOutOfTable {
                        context: "reflection departure angle",
                        value: tr,
                        min: tr_min,
                        max: tr_max,
                    });
                }
                ti = ti.clamp(ti_min, ti_max);
                tr = tr.clamp(tr_min, tr_max);
            }
        }

        let hi_idx = groups.partition_point(|g| g.0 < ti - NODE_EPS);
        let lo_idx =
            if hi_idx > 0 && (hi_idx == groups.len() || (groups[hi_idx].0 - ti).abs() > NODE_EPS) {
                hi_idx - 1
            } else {
                hi_idx
            };
        let hi_idx = hi_idx.min(groups.len() - 1);
        let lo = &groups[lo_idx];
        let hi = &groups[hi_idx];

        let v_lo = eval_group(lo.1, tr);
        let v_hi = eval_group(hi.1, tr);
        let value = match (v_lo, v_hi) {
            (Some(a), Some(b)) => {
                if (hi.0 - lo.0).abs() < NODE_EPS {
                    a
                } else {
                    a + (b - a) * (ti - lo.0) / (hi.0 - lo.0)
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => {
                // Neither bracketing incidence row spans this departure
                // angle; take the nearest row that does.
                let mut best: Option<(f64, f64)> = None;
                for g in &groups {
                    if let Some(v) = eval_group(g.1, tr) {
                        let dist = (g.0 - ti).abs();
                        if best.is_none_or(|(d, _)| dist < d) {
                            best = Some((dist, v));
                        }
                    }
                }
                best.map(|(_, v)| v).ok_or(Error::AngleOutOfTable {
                    context: "reflection departure angle",
                    value: tr,
                    min: tr_min,
                    max: tr_max,
                })?
            }
        };
        Ok(value)
    }

    /// Cross-check the reflection rows: the dB amplitude column and the
    /// reflected-power percentage column describe the same measurement, so
    /// they should agree. Returns one note per row where the implied
    /// percentage differs from the listed one by more than two percentage
    /// points.
    pub fn audit_notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        for r in &self.reflection {
            let implied_pct = 100.0 * 10f64.powf(r.alpha_db / 10.0);
            if (implied_pct - r.reflected_power_pct).abs() > 2.0 {
                notes.push(format!(
                    "reflection row (theta_i={}, theta_r={}): {} dB implies {:.2}% reflected power, table lists {:.2}%",
                    r.theta_i_deg, r.theta_r_deg, r.alpha_db, implied_pct, r.reflected_power_pct
                ));
            }
        }
        notes
    }

    fn reflection_groups(&self) -> Vec<(f64, &[ReflectionRow])> {
        let mut groups: Vec<(f64, &[ReflectionRow])> = Vec::new();
        let mut start = 0;
        for i in 1..=self.reflection.len() {
            if i == self.reflection.len()
                || (self.reflection[i].theta_i_deg - self.reflection[start].theta_i_deg).abs()
                    > NODE_EPS
            {
                groups.push((
                    self.reflection[start].theta_i_deg,
                    &self.reflection[start..i],
                ));
                start = i;
            }
        }
        groups
    }
}

/// Linear interpolation over sorted `(x, y)` nodes; `x` must lie inside the
/// node span. Exact nodes are returned untouched.
fn interp_nodes(nodes: impl Iterator<Item = (f64, f64)>, x: f64) -> f64 {
    let nodes: Vec<(f64, f64)> = nodes.collect();
    for &(nx, ny) in &nodes {
        if (nx - x).abs() <= NODE_EPS {
            return ny;
        }
    }
    for w in nodes.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x >= x0 && x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    // Callers clamp into the span first; ending up here means the span is a
    // single node.
    nodes[0].1
}

/// Departure-angle interpolation within one incidence row; `None` when the
/// row does not span `tr`.
fn eval_group(rows: &[ReflectionRow], tr: f64) -> Option<f64> {
    let lo = rows.first()?.theta_r_deg;
    let hi = rows.last()?.theta_r_deg;
    if tr < lo - NODE_EPS || tr > hi + NODE_EPS {
        return None;
    }
    Some(interp_nodes(
        rows.iter().map(|r| (r.theta_r_deg, r.alpha_db)),
        tr.clamp(lo, hi),
    ))
}

fn parse_absorption(csv: &str) -> Result<Vec<AbsorptionRow>> {
    let mut lines = nonblank_lines(csv);
    let header = lines
        .next()
        .ok_or_else(|| Error::BadCoefficientTable("absorption table is empty".into()))?;
    if header.1 != ABSORPTION_HEADER {
        return Err(Error::BadCoefficientTable(format!(
            "absorption header line must be `{ABSORPTION_HEADER}`, found `{}`",
            header.1
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let f = split_fields(line, 2, "absorption", lineno)?;
        let row = AbsorptionRow {
            theta_i_deg: parse_f64(f[0], "absorption", lineno)?,
            alpha_db: parse_f64(f[1], "absorption", lineno)?,
        };
        if row.alpha_db > 0.0 {
            return Err(Error::BadCoefficientTable(format!(
                "absorption line {lineno}: amplitude {} dB exceeds 0 dB",
                row.alpha_db
            )));
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::BadCoefficientTable(
            "absorption table needs at least two rows".into(),
        ));
    }
    for w in rows.windows(2) {
        if w[1].theta_i_deg <= w[0].theta_i_deg {
            return Err(Error::BadCoefficientTable(format!(
                "absorption angles must increase strictly: {} then {}",
                w[0].theta_i_deg, w[1].theta_i_deg
            )));
        }
    }
    Ok(rows)
}

fn parse_reflection(csv: &str) -> Result<Vec<ReflectionRow>> {
    let mut lines = nonblank_lines(csv);
    let header = lines
        .next()
        .ok_or_else(|| Error::BadCoefficientTable("reflection table is empty".into()))?;
    if header.1 != REFLECTION_HEADER {
        return Err(Error::BadCoefficientTable(format!(
            "reflection header line must be `{REFLECTION_HEADER}`, found `{}`",
            header.1
        )));
    }
    let mut rows: Vec<ReflectionRow> = Vec::new();
    for (lineno, line) in lines {
        let f = split_fields(line, 5, "reflection", lineno)?;
        let n_cells: u32 = f[2].trim().parse().map_err(|_| {
            Error::BadCoefficientTable(format!(
                "reflection line {lineno}: bad cell count `{}`",
                f[2]
            ))
        })?;
        let row = ReflectionRow {
            theta_i_deg: parse_f64(f[0], "reflection", lineno)?,
            theta_r_deg: parse_f64(f[1], "reflection", lineno)?,
            n_cells,
            alpha_db: parse_f64(f[3], "reflection", lineno)?,
            reflected_power_pct: parse_f64(f[4], "reflection", lineno)?,
        };
        if row.n_cells < 2 {
            return Err(Error::BadCoefficientTable(format!(
                "reflection line {lineno}: supercell needs at least 2 cells"
            )));
        }
        if row.alpha_db > 0.0 {
            return Err(Error::BadCoefficientTable(format!(
                "reflection line {lineno}: amplitude {} dB exceeds 0 dB",
                row.alpha_db
            )));
        }
        if !(0.0 < row.reflected_power_pct && row.reflected_power_pct <= 100.0) {
            return Err(Error::BadCoefficientTable(format!(
                "reflection line {lineno}: reflected power {}% outside (0, 100]",
                row.reflected_power_pct
            )));
        }
        if let Some(prev) = rows.last() {
            if row.theta_i_deg < prev.theta_i_deg {
                return Err(Error::BadCoefficientTable(format!(
                    "reflection line {lineno}: incidence angles must be grouped ascending"
                )));
            }
            if (row.theta_i_deg - prev.theta_i_deg).abs() <= NODE_EPS
                && row.theta_r_deg <= prev.theta_r_deg
            {
                return Err(Error::BadCoefficientTable(format!(
                    "reflection line {lineno}: departure angles must increase within a group"
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::BadCoefficientTable(
            "reflection table has no rows".into(),
        ));
    }
    Ok(rows)
}

fn nonblank_lines(csv: &str) -> impl Iterator<Item = (usize, &str)> {
    csv.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn split_fields<'a>(
    line: &'a str,
    want: usize,
    table: &str,
    lineno: usize,
) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != want {
        return Err(Error::BadCoefficientTable(format!(
            "{table} line {lineno}: expected {want} fields, found {}",
            f.len()
        )));
    }
    Ok(f)
}

fn parse_f64(s: &str, table: &str, lineno: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| {
        Error::BadCoefficientTable(format!("{table} line {lineno}: bad number `{s}`"))
    })?;
    if !v.is_finite() {
        return Err(Error::BadCoefficientTable(format!(
            "{table} line {lineno}: non-finite number"
        )));
    }
    Ok(v)
}

/// How the real-valued supercell length is snapped to a whole cell count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingPolicy {
    Floor,
    #[default]
    Round,
    Ceil,
}

impl RoundingPolicy {
    fn apply(self, x: f64) -> f64 {
        match self {
            RoundingPolicy::Floor => x.floor(),
            RoundingPolicy::Round => x.round(),
            RoundingPolicy::Ceil => x.ceil(),
        }
    }
}

/// Output of the supercell designer.
#[derive(Debug, Clone, PartialEq)]
pub struct SupercellDesign {
    /// Cells per supercell period.
    pub n_cells: u32,
    /// Diffraction order the phase gradient serves.
    pub order: i32,
    /// Design wavelength, metres.
    pub lambda: f64,
    /// Cell pitch, metres.
    pub dx: f64,
    /// Incidence angle the design assumes, radians.
    pub theta_i: f64,
    /// Requested departure angle, radians.
    pub theta_r_target: f64,
    /// Departure angle the integer cell count actually produces, radians.
    pub theta_r_achieved: f64,
    /// Phase increment between neighbouring cells, radians.
    pub phase_step: f64,
    /// Phase gradient along the supercell, radians per metre.
    pub phase_slope: f64,
    /// Per-cell control phases `(x_m, phi_rad)`, wrapped to `[0, 2*pi)`.
    pub phase_profile: Vec<(f64, f64)>,
}

/// Departure angle produced by a supercell of `n_cells` cells of pitch
/// `dx` at wavelength `lambda`, incidence `theta_i`, diffraction order
/// `order`. Errors when the grating equation leaves the visible region.
pub fn achieved_angle(n_cells: u32, theta_i: f64, order: i32, lambda: f64, dx: f64) -> Result<f64> {
    assert!(n_cells >= 1, "supercell needs at least one cell");
    if lambda <= 0.0 || lambda.is_nan() {
        return Err(Error::InvalidDistance(lambda));
    }
    if dx <= 0.0 || dx.is_nan() {
        return Err(Error::InvalidDistance(dx));
    }
    let s = theta_i.sin() + (order as f64) * lambda / (n_cells as f64 * dx);
    if s.abs() > 1.0 {
        return Err(Error::Evanescent { sin_theta: s });
    }
    Ok(s.asin())
}

/// Design the phase-gradient supercell that steers a plane wave arriving at
/// `theta_i` toward `theta_r` (radians, measured from the tile normal).
///
/// The cell count comes from the grating equation
/// `sin(theta_r) = sin(theta_i) + order * lambda / (n_cells * dx)`,
/// snapped to an integer by `policy` and clamped to at least two cells;
/// the achieved departure angle is recomputed from the snapped count.
pub fn design_supercell(
    theta_i: f64,
    theta_r: f64,
    order: i32,
    lambda: f64,
    dx: f64,
    policy: RoundingPolicy,
) -> Result<SupercellDesign> {
    if lambda <= 0.0 || lambda.is_nan() {
        return Err(Error::InvalidDistance(lambda));
    }
    if dx <= 0.0 || dx.is_nan() {
        return Err(Error::InvalidDistance(dx));
    }
    if !(0.0..90.0).contains(&theta_i.to_degrees()) {
        return Err(Error::AngleOutOfTable {
            context: "design incidence angle",
            value: theta_i.to_degrees(),
            min: 0.0,
            max: 90.0,
        });
    }
    if !(-90.0..=90.0).contains(&theta_r.to_degrees()) {
        return Err(Error::AngleOutOfTable {
            context: "design departure angle",
            value: theta_r.to_degrees(),
            min: -90.0,
            max: 90.0,
        });
    }
    if order == 0 {
        return Err(Error::SpecularDesign);
    }
    let sin_diff = theta_r.sin() - theta_i.sin();
    if sin_diff.abs() < 1e-12 {
        return Err(Error::SpecularDesign);
    }
    let ratio = (order as f64) * lambda / (dx * sin_diff);
    let snapped = policy.apply(ratio);
    let n_cells = if snapped >= u32::MAX as f64 {
        u32::MAX
    } else {
        (snapped.max(2.0)) as u32
    };
    let theta_r_achieved = achieved_angle(n_cells, theta_i, order, lambda, dx)?;
    let phase_step = (order as f64) * std::f64::consts::TAU / (n_cells as f64);
    let phase_slope = phase_step / dx;
    let phase_profile = (0..n_cells)
        .map(|k| {
            let phi = (k as f64 * phase_step).rem_euclid(std::f64::consts::TAU);
            (k as f64 * dx, phi)
        })
        .collect();
    Ok(SupercellDesign {
        n_cells,
        order,
        lambda,
        dx,
        theta_i,
        theta_r_target: theta_r,
        theta_r_achieved,
        phase_step,
        phase_slope,
        phase_profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SPEED_OF_LIGHT;
    use approx::assert_relative_eq;

    fn lambda60() -> f64 {
        SPEED_OF_LIGHT / 60e9
    }

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn absorption_nodes_are_exact() {
        let t = CoeffTable::builtin();
        let expect = [
            (0.0, -42.0),
            (10.0, -33.0),
            (20.0, -36.0),
            (30.0, -27.0),
            (40.0, -29.0),
            (50.0, -26.0),
            (60.0, -28.0),
        ];
        for (ang, val) in expect {
            let got = t.absorption_db(deg(ang), AngleLookup::Strict).unwrap();
            assert_eq!(got, val, "node at {ang} deg");
        }
    }

    #[test]
    fn absorption_interpolates_and_bounds() {
        let t = CoeffTable::builtin();
        let mid = t.absorption_db(deg(5.0), AngleLookup::Strict).unwrap();
        assert_relative_eq!(mid, -37.5, epsilon = 1e-12);
        assert!(t.absorption_db(deg(61.0), AngleLookup::Strict).is_err());
        assert!(t.absorption_db(deg(-1.0), AngleLookup::Strict).is_err());
        let clamped = t.absorption_db(deg(73.0), AngleLookup::Clamp).unwrap();
        assert_eq!(clamped, -28.0);
    }

    #[test]
    fn reflection_nodes_are_exact() {
        let t = CoeffTable::builtin();
        let expect = [
            (15.0, 40.0, -0.521),
            (15.0, 50.0, -0.244),
            (15.0, 80.0, -0.363),
            (20.0, 40.0, -0.882),
            (20.0, 80.0, -0.552),
            (25.0, 50.0, -0.818),
            (25.0, 80.0, -0.897),
        ];
        for (ti, tr, val) in expect {
            let got = t
                .reflection_db(deg(ti), deg(tr), AngleLookup::Strict)
                .unwrap();
            assert_relative_eq!(got, val, epsilon = 1e-12);
        }
    }

    #[test]
    fn reflection_interpolates_between_departures_and_incidences() {
        let t = CoeffTable::builtin();
        // Within the 15-degree row, halfway between 50 and 60 degrees.
        let v = t
            .reflection_db(deg(15.0), deg(55.0), AngleLookup::Strict)
            .unwrap();
        assert_relative_eq!(v, -0.3405, epsilon = 1e-12);
        // Between incidence rows 15 and 20 at a covered departure angle.
        let v = t
            .reflection_db(deg(17.5), deg(45.0), AngleLookup::Strict)
            .unwrap();
        assert_relative_eq!(v, -0.523, epsilon = 1e-9);
        // Row 25 does not span 43 degrees, so row 20 covers alone.
        let v = t
            .reflection_db(deg(22.0), deg(43.0), AngleLookup::Strict)
            .unwrap();
        assert_relative_eq!(v, -0.7509, epsilon = 1e-9);
    }

    #[test]
    fn reflection_falls_back_to_nearest_covering_incidence_row() {
        let t = CoeffTable::builtin();
        // At 25 degrees incidence the row starts at 50 degrees departure;
        // 45 degrees is answered by the 20-degree row.
        let v = t
            .reflection_db(deg(25.0), deg(45.0), AngleLookup::Strict)
            .unwrap();
        let row20 = t
            .reflection_db(deg(20.0), deg(45.0), AngleLookup::Strict)
            .unwrap();
        assert_relative_eq!(v, row20, epsilon = 1e-12);
    }

    #[test]
    fn reflection_strict_domain_and_clamp() {
        let t = CoeffTable::builtin();
        assert!(t
            .reflection_db(deg(14.0), deg(50.0), AngleLookup::Strict)
            .is_err());
        assert!(t
            .reflection_db(deg(20.0), deg(85.0), AngleLookup::Strict)
            .is_err());
        // Clamp maps (73.38, 32.47) onto the (25, 40) corner lookup, which
        // the 20-degree row answers.
        let v = t
            .reflection_db(deg(73.38), deg(32.47), AngleLookup::Clamp)
            .unwrap();
        assert_relative_eq!(v, -0.882, epsilon = 1e-12);
    }

    #[test]
    fn audit_flags_exactly_the_inconsistent_row() {
        let notes = CoeffTable::builtin().audit_notes();
        assert_eq!(notes.len(), 1, "notes: {notes:?}");
        assert!(notes[0].contains("theta_i=15"));
        assert!(notes[0].contains("theta_r=50"));
    }

    #[test]
    fn bad_tables_are_rejected() {
        let abs_ok = "theta_i_deg,alpha_abs_db\n0,-42\n10,-33\n";
        let refl_ok =
            "theta_i_deg,theta_r_deg,n_m,alpha_ref_db,reflected_power_pct\n15,40,13,-0.5,88.0\n";
        assert!(CoeffTable::from_csv("bogus\n0,-42\n", refl_ok).is_err());
        assert!(CoeffTable::from_csv("theta_i_deg,alpha_abs_db\n0,-42\n", refl_ok).is_err());
        assert!(
            CoeffTable::from_csv("theta_i_deg,alpha_abs_db\n10,-42\n0,-33\n", refl_ok).is_err()
        );
        assert!(CoeffTable::from_csv(
            abs_ok,
            "theta_i_deg,theta_r_deg,n_m,alpha_ref_db,reflected_power_pct\n15,40,1,-0.5,88.0\n"
        )
        .is_err());
        assert!(CoeffTable::from_csv(
            abs_ok,
            "theta_i_deg,theta_r_deg,n_m,alpha_ref_db,reflected_power_pct\n15,40,13,0.5,88.0\n"
        )
        .is_err());
        assert!(CoeffTable::from_csv(
            abs_ok,
            "theta_i_deg,theta_r_deg,n_m,alpha_ref_db,reflected_power_pct\n15,40,13,-0.5,0\n"
        )
        .is_err());
    }

    #[test]
    fn load_dir_reads_both_assets() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("hsf_absorption_v1.csv"),
            "theta_i_deg,alpha_abs_db\n0,-40\n60,-20\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("hsf_reflection_v1.csv"),
            "theta_i_deg,theta_r_deg,n_m,alpha_ref_db,reflected_power_pct\n15,40,13,-0.5,88.0\n",
        )
        .unwrap();
        let t = CoeffTable::load_dir(dir.path()).unwrap();
        assert_eq!(
            t.absorption_db(deg(0.0), AngleLookup::Strict).unwrap(),
            -40.0
        );
        assert!(CoeffTable::load_dir(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn designer_reproduces_reference_cell_counts() {
        let t = CoeffTable::builtin();
        for row in t.reflection_rows() {
            let d = design_supercell(
                deg(row.theta_i_deg),
                deg(row.theta_r_deg),
                1,
                lambda60(),
                DEFAULT_CELL_PITCH_M,
                RoundingPolicy::Round,
            )
            .unwrap();
            let delta = d.n_cells as i64 - row.n_cells as i64;
            assert!(
                delta.abs() <= 1,
                "({}, {}): designed {} vs reference {}",
                row.theta_i_deg,
                row.theta_r_deg,
                d.n_cells,
                row.n_cells
            );
        }
    }

    #[test]
    fn designer_spot_values_and_policies() {
        let d = design_supercell(
            deg(15.0),
            deg(50.0),
            1,
            lambda60(),
            DEFAULT_CELL_PITCH_M,
            RoundingPolicy::Round,
        )
        .unwrap();
        assert_eq!(d.n_cells, 10);
        assert_relative_eq!(d.theta_r_achieved.to_degrees(), 49.3298, epsilon = 1e-3);
        let floor = design_supercell(
            deg(15.0),
            deg(50.0),
            1,
            lambda60(),
            DEFAULT_CELL_PITCH_M,
            RoundingPolicy::Floor,
        )
        .unwrap();
        assert_eq!(floor.n_cells, 9);
        let ceil = design_supercell(
            deg(15.0),
            deg(50.0),
            1,
            lambda60(),
            DEFAULT_CELL_PITCH_M,
            RoundingPolicy::Ceil,
        )
        .unwrap();
        assert_eq!(ceil.n_cells, 10);
    }

    #[test]
    fn phase_profile_is_linear_and_wrapped() {
        let d = design_supercell(
            deg(15.0),
            deg(50.0),
            1,
            lambda60(),
            DEFAULT_CELL_PITCH_M,
            RoundingPolicy::Round,
        )
        .unwrap();
        assert_eq!(d.phase_profile.len(), d.n_cells as usize);
        assert_eq!(d.phase_profile[0], (0.0, 0.0));
        for (k, &(x, phi)) in d.phase_profile.iter().enumerate() {
            assert_relative_eq!(x, k as f64 * DEFAULT_CELL_PITCH_M, epsilon = 1e-15);
            let expect = (k as f64 * d.phase_step).rem_euclid(std::f64::consts::TAU);
            assert_relative_eq!(phi, expect, epsilon = 1e-12);
            assert!((0.0..std::f64::consts::TAU).contains(&phi));
        }
        assert_relative_eq!(
            d.phase_slope,
            d.phase_step / DEFAULT_CELL_PITCH_M,
            epsilon = 1e-12
        );
    }

    #[test]
    fn designer_rejects_specular_and_evanescent_requests() {
        let l = lambda60();
        assert!(matches!(
            design_supercell(
                deg(30.0),
                deg(30.0),
                1,
                l,
                DEFAULT_CELL_PITCH_M,
                RoundingPolicy::Round
            ),
            Err(Error::SpecularDesign)
        ));
        assert!(matches!(
            design_supercell(
                deg(30.0),
                deg(50.0),
                0,
                l,
                DEFAULT_CELL_PITCH_M,
                RoundingPolicy::Round
            ),
            Err(Error::SpecularDesign)
        ));
        // Six cells at 15 degrees incidence push the grating sum past 1.
        assert!(matches!(
            achieved_angle(6, deg(15.0), 1, l, DEFAULT_CELL_PITCH_M),
            Err(Error::Evanescent { .. })
        ));
        assert!(design_supercell(
            deg(15.0),
            deg(50.0),
            1,
            -1.0,
            DEFAULT_CELL_PITCH_M,
            RoundingPolicy::Round
        )
        .is_err());
    }

    #[test]
    fn achieved_angle_reference_points() {
        let l = lambda60();
        let a10 = achieved_angle(10, deg(15.0), 1, l, DEFAULT_CELL_PITCH_M).unwrap();
        assert_relative_eq!(a10.to_degrees(), 49.3298, epsilon = 1e-3);
        let a13 = achieved_angle(13, deg(15.0), 1, l, DEFAULT_CELL_PITCH_M).unwrap();
        assert_relative_eq!(a13.to_degrees(), 40.0285, epsilon = 1e-3);
    }

    #[test]
    fn default_tile_config_absorbs_and_collimates() {
        let c = TileConfig::default();
        assert_eq!(c.mode, TileMode::Absorb);
        assert!(c.collimate);
    }
}

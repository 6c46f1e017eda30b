//! Per-plane probabilistic occupancy maps, their symbolic encoding and the
//! extraction of disconnected safe subregions.

mod floodfill;
mod morphology;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellIndex, Mask, Tiling};
use crate::scalar::Scalar;
use crate::sensor::{beams_per_cell, SonarSpec};

pub use floodfill::{extract_navigable, extract_subregions, Subregion, MIN_SUBREGION_CELLS};
pub use morphology::{closing, dilate, erode};

/// Probability assigned to cells filled in by morphological closing.
pub const CLOSED_CELL_PROBABILITY: f64 = 0.9;
/// Default threat threshold `p_T`.
pub const DEFAULT_THREAT_THRESHOLD: f64 = 0.2;

/// One occupied/free reading for a cell of the plane below the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reading {
    pub cell: CellIndex,
    pub occupied: bool,
}

/// `log_base(9) / b_total`: the per-reading increment that lifts a cell observed
/// `b_total` times as occupied to probability 0.9.
pub fn l_occ_for_readings<T: Scalar>(b_total: T, log_base: T) -> T {
    T::of(9.0).log(log_base) / b_total
}

/// `l_occ` for a sonar sweeping lap width `w` from `delta_h` above the plane at speed
/// `v`: each cell collects `b_total = (w / v) / dt * B` readings in one pass, where `B` is
/// the number of beams crossing it per scan.
pub fn l_occ_from_geometry<T: Scalar>(
    beam_count: usize,
    theta: T,
    w: T,
    delta_h: T,
    v: T,
    dt: T,
    log_base: T,
) -> T {
    let b = beams_per_cell(beam_count, theta, w, delta_h);
    l_occ_for_readings(w / v / dt * b, log_base)
}

/// Base-10 `l_occ` for a configured sonar.
pub fn compute_l_occ(spec: &SonarSpec, w: f64, delta_h: f64, v: f64) -> f64 {
    l_occ_from_geometry(
        spec.beam_count,
        spec.aperture(),
        w,
        delta_h,
        v,
        spec.sample_interval,
        10.0,
    )
}

/// Log-odds occupancy estimate over a tiling.
///
/// Evidence is kept as an integer net count per cell (occupied minus free readings),
/// so the log-odds `net * l_occ` is independent of the order in which readings arrive.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbOccupancyGrid<T: Scalar> {
    pub tiling: Tiling,
    l_occ: T,
    log_base: T,
    net: Vec<i64>,
    readings: Vec<u32>,
    /// Log-odds overrides written by closing.
    pinned: Vec<Option<T>>,
}

impl<T: Scalar> ProbOccupancyGrid<T> {
    pub fn new(tiling: Tiling, l_occ: T) -> Result<Self> {
        Self::with_base(tiling, l_occ, T::of(10.0))
    }

    pub fn with_base(tiling: Tiling, l_occ: T, log_base: T) -> Result<Self> {
        if !(l_occ > T::zero() && l_occ.is_finite()) {
            return Err(Error::Config(format!(
                "l_occ must be positive and finite (got {l_occ})"
            )));
        }
        if !(log_base > T::one() && log_base.is_finite()) {
            return Err(Error::Config(format!(
                "log base must exceed 1 (got {log_base})"
            )));
        }
        let n = tiling.len();
        Ok(Self {
            tiling,
            l_occ,
            log_base,
            net: vec![0; n],
            readings: vec![0; n],
            pinned: vec![None; n],
        })
    }

    pub fn l_occ(&self) -> T {
        self.l_occ
    }

    pub fn l_free(&self) -> T {
        -self.l_occ
    }

    pub fn log_base(&self) -> T {
        self.log_base
    }

    /// Applies one scan's readings. Nothing is applied if any cell is off the tiling.
    pub fn update(&mut self, evidence: &[Reading]) -> Result<()> {
        if let Some(bad) = evidence.iter().find(|r| !self.tiling.contains(r.cell)) {
            return Err(Error::Domain(format!(
                "evidence cell ({}, {}) outside {}x{} tiling",
                bad.cell.ix, bad.cell.iy, self.tiling.nx, self.tiling.ny
            )));
        }
        for r in evidence {
            let i = self.tiling.index(r.cell);
            self.net[i] += if r.occupied { 1 } else { -1 };
            self.readings[i] += 1;
        }
        Ok(())
    }

    pub fn net_evidence(&self, cell: CellIndex) -> i64 {
        self.net[self.tiling.index(cell)]
    }

    pub fn reading_count(&self, cell: CellIndex) -> u32 {
        self.readings[self.tiling.index(cell)]
    }

    pub fn log_odds(&self, cell: CellIndex) -> T {
        let i = self.tiling.index(cell);
        match self.pinned[i] {
            Some(l) => l,
            None => T::from_i64(self.net[i]).expect("evidence count representable") * self.l_occ,
        }
    }

    pub fn probability(&self, cell: CellIndex) -> T {
        T::one() / (T::one() + self.log_base.powf(-self.log_odds(cell)))
    }

    /// Overrides a cell's estimate with a fixed probability.
    pub fn pin_probability(&mut self, cell: CellIndex, p: T) {
        let i = self.tiling.index(cell);
        self.pinned[i] = Some((p / (T::one() - p)).log(self.log_base));
    }

    /// Cells crossed by at least one beam.
    pub fn scanned_mask(&self) -> Mask {
        Mask {
            nx: self.tiling.nx,
            ny: self.tiling.ny,
            cells: self.readings.iter().map(|&n| n > 0).collect(),
        }
    }

    /// Cells whose occupancy probability exceeds `threshold`.
    pub fn high_mask(&self, threshold: T) -> Mask {
        Mask::from_fn(self.tiling.nx, self.tiling.ny, |c| {
            self.probability(c) > threshold
        })
    }

    /// Binary PGM (`P5`), probability scaled to 0..=255, rows in increasing `iy`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.tiling.nx, self.tiling.ny).into_bytes();
        out.extend(self.tiling.cells().map(|c| {
            let p = self.probability(c).to_f64_lossy().clamp(0.0, 1.0);
            (p * 255.0).round() as u8
        }));
        out
    }
}

/// Parses a binary PGM written by [`ProbOccupancyGrid::to_pgm`] into `(nx, ny, pixels)`.
pub fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos]).map_err(|e| Error::Parse(e.to_string()))?,
        );
    }
    if fields[0] != "P5" {
        return Err(Error::Parse(format!(
            "expected P5 magic, found {:?}",
            fields[0]
        )));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("PGM header {s:?}: {e}")))
    };
    let (nx, ny, max) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if max != 255 {
        return Err(Error::Parse(format!("unsupported PGM maxval {max}")));
    }
    let data = &bytes[pos + 1..];
    if data.len() != nx * ny {
        return Err(Error::Parse(format!(
            "PGM body has {} bytes, expected {}",
            data.len(),
            nx * ny
        )));
    }
    Ok((nx, ny, data.to_vec()))
}

/// Fills narrow gaps between high-probability cells.
///
/// The mask of cells with probability above `threat_threshold` is closed with a
/// square `element_size` element; cells added by the closing are pinned at
/// [`CLOSED_CELL_PROBABILITY`] and every other cell keeps its estimate.
pub fn close<T: Scalar>(
    grid: &ProbOccupancyGrid<T>,
    element_size: usize,
    threat_threshold: T,
) -> Result<ProbOccupancyGrid<T>> {
    if element_size < 3 || element_size.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "structuring element must be odd and >= 3 (got {element_size})"
        )));
    }
    let high = grid.high_mask(threat_threshold);
    let closed = closing(&high, element_size / 2);
    let mut out = grid.clone();
    for (i, (&before, &after)) in high.cells.iter().zip(&closed.cells).enumerate() {
        if after && !before {
            out.pin_probability(grid.tiling.cell(i), T::of(CLOSED_CELL_PROBABILITY));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Unexplored,
    Safe,
    Threat,
}

impl Label {
    pub fn as_char(self) -> char {
        match self {
            Label::Unexplored => 'U',
            Label::Safe => 'S',
            Label::Threat => 'T',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'U' => Some(Label::Unexplored),
            'S' => Some(Label::Safe),
            'T' => Some(Label::Threat),
            _ => None,
        }
    }
}

/// Per-cell labels over `{U, S, T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicMap {
    pub nx: usize,
    pub ny: usize,
    pub labels: Vec<Label>,
    pub threat_threshold: f64,
}

impl SymbolicMap {
    pub fn filled(nx: usize, ny: usize, label: Label, threat_threshold: f64) -> Self {
        Self {
            nx,
            ny,
            labels: vec![label; nx * ny],
            threat_threshold,
        }
    }

    pub fn get(&self, cell: CellIndex) -> Label {
        self.labels[cell.iy * self.nx + cell.ix]
    }

    pub fn set(&mut self, cell: CellIndex, label: Label) {
        self.labels[cell.iy * self.nx + cell.ix] = label;
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.ix < self.nx && cell.iy < self.ny
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn mask_of(&self, label: Label) -> Mask {
        Mask {
            nx: self.nx,
            ny: self.ny,
            cells: self.labels.iter().map(|&l| l == label).collect(),
        }
    }

    /// One row per line (increasing `iy`), one character per cell.
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.nx + 1) * self.ny);
        for row in self.labels.chunks(self.nx) {
            out.extend(row.iter().map(|l| l.as_char()));
            out.push('\n');
        }
        out
    }

    pub fn from_ascii(text: &str, threat_threshold: f64) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        let nx = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        if nx == 0 {
            return Err(Error::Parse("empty symbolic map".into()));
        }
        let mut labels = Vec::with_capacity(nx * rows.len());
        for (iy, row) in rows.iter().enumerate() {
            if row.chars().count() != nx {
                return Err(Error::Parse(format!(
                    "row {iy} has {} cells, expected {nx}",
                    row.chars().count()
                )));
            }
            for c in row.chars() {
                labels.push(
                    Label::from_char(c)
                        .ok_or_else(|| Error::Parse(format!("row {iy}: unknown label {c:?}")))?,
                );
            }
        }
        Ok(Self {
            nx,
            ny: rows.len(),
            labels,
            threat_threshold,
        })
    }
}

/// Labels every cell: unscanned cells `U`, scanned cells above `threat_threshold` `T`,
/// the remaining scanned cells `S`.
pub fn encode<T: Scalar>(
    grid: &ProbOccupancyGrid<T>,
    scanned: &Mask,
    threat_threshold: T,
) -> SymbolicMap {
    let labels = grid
        .tiling
        .cells()
        .map(|c| {
            if !scanned.get(c) {
                Label::Unexplored
            } else if grid.probability(c) > threat_threshold {
                Label::Threat
            } else {
                Label::Safe
            }
        })
        .collect();
    SymbolicMap {
        nx: grid.tiling.nx,
        ny: grid.tiling.ny,
        labels,
        threat_threshold: threat_threshold.to_f64_lossy(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiling() -> Tiling {
        Tiling::new(25.0, 18, 18).unwrap()
    }

    #[test]
    fn l_occ_for_reference_sonar() {
        let spec = SonarSpec::default();
        let l = compute_l_occ(&spec, 25.0, 85.0, 1.0);
        assert!((l - 0.002139).abs() < 1e-6, "{l}");
        let slow = compute_l_occ(&spec, 25.0, 85.0, 0.5);
        assert!((slow - l / 2.0).abs() < 1e-15);
        assert!((l_occ_for_readings(1.0f64, 10.0) - 9f64.log10()).abs() < 1e-15);
        let l32 = l_occ_from_geometry::<f32>(128, 120f32.to_radians(), 25.0, 85.0, 1.0, 1.0, 10.0);
        assert!((l32 as f64 - l).abs() < 1e-8);
    }

    #[test]
    fn single_occupied_reading_from_prior() {
        let mut g = ProbOccupancyGrid::<f64>::new(tiling(), 0.00214).unwrap();
        let c = CellIndex::new(3, 4);
        g.update(&[Reading {
            cell: c,
            occupied: true,
        }])
        .unwrap();
        assert_eq!(g.log_odds(c), 0.00214);
        let p = g.probability(c);
        assert!((p - 1.0 / (1.0 + 10f64.powf(-0.00214))).abs() < 1e-15);
        assert_eq!(g.l_free(), -g.l_occ());
        assert_eq!(g.log_odds(CellIndex::new(0, 0)), 0.0);
    }

    #[test]
    fn full_scale_evidence_reaches_point_nine() {
        let b_total = 446.0f64;
        let l_occ = l_occ_for_readings(b_total, 10.0);
        let mut g = ProbOccupancyGrid::new(tiling(), l_occ).unwrap();
        let c = CellIndex::new(0, 0);
        let readings = vec![
            Reading {
                cell: c,
                occupied: true
            };
            446
        ];
        g.update(&readings).unwrap();
        assert!((g.probability(c) - 0.9).abs() < 1e-9);
    }

    #[test]
    fn out_of_tiling_evidence_is_rejected_atomically() {
        let mut g = ProbOccupancyGrid::<f32>::new(tiling(), 0.01).unwrap();
        let ok = Reading {
            cell: CellIndex::new(1, 1),
            occupied: true,
        };
        let bad = Reading {
            cell: CellIndex::new(18, 0),
            occupied: true,
        };
        assert!(matches!(g.update(&[ok, bad]), Err(Error::Domain(_))));
        assert_eq!(g.reading_count(ok.cell), 0);
    }

    #[test]
    fn encoding_thresholds() {
        let t = tiling();
        let mut g = ProbOccupancyGrid::<f64>::new(t, 0.00214).unwrap();
        let nothing = Mask::new(18, 18);
        assert_eq!(encode(&g, &nothing, 0.2).count(Label::Unexplored), 324);

        let undecided = CellIndex::new(2, 2);
        let cleared = CellIndex::new(5, 5);
        g.update(&[
            Reading {
                cell: undecided,
                occupied: true,
            },
            Reading {
                cell: undecided,
                occupied: false,
            },
        ])
        .unwrap();
        // 200 free readings leave p = 1/(1 + 10^0.428) ~ 0.27, still a threat; the
        // threshold is crossed once the net count exceeds log10(4) / l_occ ~ 281.3.
        g.update(&vec![
            Reading {
                cell: cleared,
                occupied: false
            };
            200
        ])
        .unwrap();
        assert!((g.probability(cleared) - 0.27184).abs() < 1e-4);
        assert_eq!(
            encode(&g, &g.scanned_mask(), 0.2).get(cleared),
            Label::Threat
        );
        g.update(&vec![
            Reading {
                cell: cleared,
                occupied: false
            };
            81
        ])
        .unwrap();
        assert_eq!(
            encode(&g, &g.scanned_mask(), 0.2).get(cleared),
            Label::Threat
        );
        g.update(&[Reading {
            cell: cleared,
            occupied: false,
        }])
        .unwrap();
        let sym = encode(&g, &g.scanned_mask(), 0.2);
        assert_eq!(sym.get(undecided), Label::Threat);
        assert_eq!(sym.get(cleared), Label::Safe);
        assert_eq!(sym.count(Label::Unexplored), 322);
    }

    #[test]
    fn closing_fills_single_cell_gap() {
        let t = tiling();
        let mut g = ProbOccupancyGrid::<f64>::new(t, 0.05).unwrap();
        // Everything scanned free except two blobs separated by the column ix = 8.
        for c in t.cells() {
            let occupied = (c.ix == 7 || c.ix == 9) && (5..9).contains(&c.iy);
            g.update(&vec![Reading { cell: c, occupied }; 40]).unwrap();
        }
        let closed = close(&g, 3, 0.2).unwrap();
        for iy in 5..9 {
            let gap = CellIndex::new(8, iy);
            assert!(g.probability(gap) < 0.2);
            assert!((closed.probability(gap) - 0.9).abs() < 1e-12);
        }
        assert!(closed.probability(CellIndex::new(8, 3)) < 0.2);
        assert!(matches!(close(&g, 4, 0.2), Err(Error::Config(_))));
    }

    #[test]
    fn closing_leaves_free_grid_alone() {
        let t = tiling();
        let mut g = ProbOccupancyGrid::<f64>::new(t, 0.05).unwrap();
        for c in t.cells() {
            g.update(&vec![
                Reading {
                    cell: c,
                    occupied: false
                };
                40
            ])
            .unwrap();
        }
        assert_eq!(close(&g, 3, 0.2).unwrap(), g);
    }

    #[test]
    fn exports_round_trip() {
        let t = Tiling::new(25.0, 5, 3).unwrap();
        let mut g = ProbOccupancyGrid::<f64>::new(t, 0.5).unwrap();
        g.update(&[Reading {
            cell: CellIndex::new(4, 2),
            occupied: true,
        }])
        .unwrap();
        let (nx, ny, px) = read_pgm(&g.to_pgm()).unwrap();
        assert_eq!((nx, ny), (5, 3));
        assert_eq!(px[0], 128);
        assert_eq!(
            px[14],
            (g.probability(CellIndex::new(4, 2)) * 255.0).round() as u8
        );

        let sym = encode(&g, &g.scanned_mask(), 0.2);
        let back = SymbolicMap::from_ascii(&sym.to_ascii(), 0.2).unwrap();
        assert_eq!(back, sym);
        assert!(SymbolicMap::from_ascii("SSX\n", 0.2).is_err());
    }
}

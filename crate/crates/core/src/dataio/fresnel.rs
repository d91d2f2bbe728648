//! Ingestion of Institut Fresnel multi-frequency TM measurements.
//!
//! Expected text format (pinned in `docs/fresnel_format.md`): one record
//! per line, whitespace separated,
//!
//! ```text
//! tx_deg  rx_deg  freq_GHz  Re(E_tot)  Im(E_tot)  Re(E_inc)  Im(E_inc)
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Angles are absolute
//! positions on the measurement circle in degrees.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use super::container::{Dataset, DatasetHeader, DatasetKind, DATASET_SCHEMA};
use crate::physics::{incident_fields_at, ArrayLayout, CMatrix};
use crate::scene::{Material, Phantom, Shape};
use crate::{wavenumber, Error, Result};

/// Radius of the transmitter and receiver circle (m).
pub const FRESNEL_RADIUS: f64 = 1.67;
/// Half-width of the inversion region (m).
pub const FRESNEL_ROI_HALF_WIDTH: f64 = 0.1;
/// Angular matching tolerance (degrees).
pub const ANGLE_TOL_DEG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFresnelRecord {
    pub tx_deg: f64,
    pub rx_deg: f64,
    pub freq_ghz: f64,
    pub total: Complex64,
    pub incident: Complex64,
}

/// Transmitter, receiver-per-transmitter and frequency counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FresnelStructure {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_freq: usize,
}

/// The published FoamTwinDielTM structure.
pub const FOAM_TWIN_DIEL: FresnelStructure = FresnelStructure {
    n_tx: 18,
    n_rx: 241,
    n_freq: 9,
};

fn parse_line(line: &str, lineno: usize) -> Result<RawFresnelRecord> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 7 columns, found {}", fields.len()),
        });
    }
    let mut v = [0.0; 7];
    for (k, f) in fields.iter().enumerate() {
        v[k] = f.parse::<f64>().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("column {}: {e} ({f:?})", k + 1),
        })?;
        if !v[k].is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("column {} is not finite", k + 1),
            });
        }
    }
    for (name, a) in [("transmitter", v[0]), ("receiver", v[1])] {
        if !(0.0..360.0).contains(&a) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("{name} angle {a} outside [0, 360)"),
            });
        }
    }
    let f = v[2];
    if (f - f.round()).abs() > 1e-9 || !(2.0..=10.0).contains(&f.round()) {
        return Err(Error::Parse {
            line: lineno,
            message: format!("frequency {f} GHz is not one of 2..10 GHz"),
        });
    }
    Ok(RawFresnelRecord {
        tx_deg: v[0],
        rx_deg: v[1],
        freq_ghz: f,
        total: Complex64::new(v[3], v[4]),
        incident: Complex64::new(v[5], v[6]),
    })
}

/// Parses records from text; with `expected`, also checks the structure.
pub fn parse_fresnel_str(text: &str, expected: Option<FresnelStructure>) -> Result<Vec<RawFresnelRecord>> {
    let mut records = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        records.push(parse_line(t, k + 1)?);
    }
    if records.is_empty() {
        return Err(Error::Integrity("no data records found".into()));
    }
    if let Some(s) = expected {
        check_structure(&records, s)?;
    }
    Ok(records)
}

/// Parses a FoamTwinDielTM file and checks the 18 × 241 × 9 structure.
pub fn parse_fresnel(path: impl AsRef<Path>) -> Result<Vec<RawFresnelRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fresnel_str(&text, Some(FOAM_TWIN_DIEL))
}

/// Writes records in the same format (full round-trip precision).
pub fn write_fresnel(path: impl AsRef<Path>, records: &[RawFresnelRecord], comment: &str) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("# tx_deg rx_deg freq_GHz Re_tot Im_tot Re_inc Im_inc\n");
    for r in records {
        let _ = writeln!(
            out,
            "{} {} {} {:e} {:e} {:e} {:e}",
            r.tx_deg, r.rx_deg, r.freq_ghz, r.total.re, r.total.im, r.incident.re, r.incident.im
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Integer key for an angle on a 1e-6° lattice.
fn angle_key(deg: f64) -> i64 {
    (deg / ANGLE_TOL_DEG).round() as i64
}

fn freq_key(ghz: f64) -> i64 {
    ghz.round() as i64
}

pub fn check_structure(records: &[RawFresnelRecord], expected: FresnelStructure) -> Result<()> {
    let mut groups: BTreeMap<(i64, i64), Vec<i64>> = BTreeMap::new();
    for r in records {
        groups.entry((angle_key(r.tx_deg), freq_key(r.freq_ghz))).or_default().push(angle_key(r.rx_deg));
    }
    let mut txs: Vec<i64> = groups.keys().map(|k| k.0).collect();
    txs.sort_unstable();
    txs.dedup();
    let mut freqs: Vec<i64> = groups.keys().map(|k| k.1).collect();
    freqs.sort_unstable();
    freqs.dedup();
    if txs.len() != expected.n_tx || freqs.len() != expected.n_freq {
        return Err(Error::Integrity(format!(
            "found {} transmitters and {} frequencies, expected {} and {}",
            txs.len(),
            freqs.len(),
            expected.n_tx,
            expected.n_freq
        )));
    }
    if groups.len() != expected.n_tx * expected.n_freq {
        return Err(Error::Integrity("some transmitter/frequency pairs are missing".into()));
    }
    for ((tx, f), rx) in &groups {
        let mut sorted = rx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != rx.len() {
            return Err(Error::Integrity(format!(
                "duplicate receiver rows for transmitter {}° at {f} GHz",
                *tx as f64 * ANGLE_TOL_DEG
            )));
        }
        if rx.len() != expected.n_rx {
            return Err(Error::Integrity(format!(
                "transmitter {}° at {f} GHz has {} receivers, expected {}",
                *tx as f64 * ANGLE_TOL_DEG,
                rx.len(),
                expected.n_rx
            )));
        }
    }
    let total = expected.n_tx * expected.n_rx * expected.n_freq;
    if records.len() != total {
        return Err(Error::Integrity(format!("found {} records, expected {total}", records.len())));
    }
    Ok(())
}

/// Point on the measurement circle.
pub fn angle_position(deg: f64, radius: f64) -> [f64; 2] {
    let t = deg.to_radians();
    [radius * t.cos(), radius * t.sin()]
}

/// Estimated FoamTwinDiel geometry: a foam cylinder (diameter 80 mm,
/// `eps_r` 1.45) at the origin and two plastic cylinders (diameter 31 mm,
/// `eps_r` 3). Centers are estimates; pass a scene file to override.
pub fn foam_twin_diel_reference() -> Phantom {
    let foam = Material {
        eps_r: 1.45,
        sigma: 0.0,
    };
    let plastic = Material { eps_r: 3.0, sigma: 0.0 };
    Phantom {
        shapes: vec![
            Shape::disk([0.0, 0.0], 0.040, foam),
            Shape::disk([-0.0555, 0.0005], 0.0155, plastic),
            Shape::disk([-0.005, 0.004], 0.0155, plastic),
        ],
    }
}

/// Result of [`calibrate`].
#[derive(Debug, Clone)]
pub struct Calibration {
    /// `c_p (E_tot - E_inc)`, zero at inactive receivers.
    pub scattered: CMatrix,
    /// `c_p E_inc`.
    pub incident: CMatrix,
    /// One factor per transmitter.
    pub factors: Vec<Complex64>,
    /// Reference receiver index per transmitter.
    pub reference: Vec<usize>,
    /// Per transmitter, `max/min` of `|E_inc^sim / E_inc^meas|` over active
    /// receivers. A diagnostic for convention mismatches; 1 is ideal.
    pub magnitude_spread: Vec<f64>,
}

fn angle_of(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0]).to_degrees().rem_euclid(360.0)
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Maps measured fields to the simulation convention with one complex
/// factor per transmitter, `c_p = E_inc^sim(r*) / E_inc^meas(r*)`, where `r*`
/// is the active receiver closest to the point opposite the transmitter.
pub fn calibrate(total: &CMatrix, incident: &CMatrix, layout: &ArrayLayout, k0: f64) -> Result<Calibration> {
    let shape = (layout.n_tx(), layout.n_rx());
    if total.dim() != shape || incident.dim() != shape {
        return Err(Error::invalid("measured matrices do not match the layout"));
    }
    let sim = incident_fields_at(layout, k0)?;
    let mut scattered = Array2::zeros(shape);
    let mut inc_out = Array2::zeros(shape);
    let mut factors = Vec::with_capacity(shape.0);
    let mut reference = Vec::with_capacity(shape.0);
    let mut magnitude_spread = Vec::with_capacity(shape.0);
    for p in 0..shape.0 {
        let opposite = (angle_of(layout.tx[p]) + 180.0).rem_euclid(360.0);
        let q_ref = (0..shape.1)
            .filter(|&q| layout.mask[[p, q]])
            .min_by(|&a, &b| {
                angular_distance(angle_of(layout.rx[a]), opposite)
                    .partial_cmp(&angular_distance(angle_of(layout.rx[b]), opposite))
                    .expect("finite angles")
            })
            .expect("validated layout has an active receiver");
        let meas_ref = incident[[p, q_ref]];
        if meas_ref.norm() == 0.0 {
            return Err(Error::InvalidDataset(format!(
                "measured incident field vanishes at the reference receiver of transmitter {p}"
            )));
        }
        let c = sim[[p, q_ref]] / meas_ref;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for q in 0..shape.1 {
            if !layout.mask[[p, q]] {
                continue;
            }
            scattered[[p, q]] = c * (total[[p, q]] - incident[[p, q]]);
            inc_out[[p, q]] = c * incident[[p, q]];
            if incident[[p, q]].norm() > 0.0 {
                let r = (sim[[p, q]] / incident[[p, q]]).norm();
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        factors.push(c);
        reference.push(q_ref);
        magnitude_spread.push(if lo > 0.0 { hi / lo } else { f64::INFINITY });
    }
    Ok(Calibration {
        scattered,
        incident: inc_out,
        factors,
        reference,
        magnitude_spread,
    })
}

/// Keeps receivers on a `rx_step_deg` lattice of absolute angles and builds
/// a calibrated dataset for the requested band (GHz).
///
/// The receiver list is the union of kept positions over transmitters; the
/// mask marks which ones each transmitter actually measured.
pub fn subsample_and_split(records: &[RawFresnelRecord], rx_step_deg: f64, band_ghz: &[f64]) -> Result<Dataset> {
    if !(rx_step_deg > 0.0) {
        return Err(Error::invalid("receiver step must be positive"));
    }
    if band_ghz.is_empty() {
        return Err(Error::invalid("band must contain at least one frequency"));
    }
    let mut available: Vec<i64> = records.iter().map(|r| freq_key(r.freq_ghz)).collect();
    available.sort_unstable();
    available.dedup();
    let mut band: Vec<i64> = Vec::with_capacity(band_ghz.len());
    for &f in band_ghz {
        let k = freq_key(f);
        if (f - k as f64).abs() > 1e-9 || !available.contains(&k) {
            return Err(Error::InvalidDataset(format!("frequency {f} GHz is not in the data")));
        }
        band.push(k);
    }
    band.sort_unstable();
    band.dedup();

    let on_lattice = |deg: f64| {
        let steps = deg / rx_step_deg;
        (steps - steps.round()).abs() * rx_step_deg <= ANGLE_TOL_DEG
    };
    let mut tx_keys: Vec<i64> = records.iter().map(|r| angle_key(r.tx_deg)).collect();
    tx_keys.sort_unstable();
    tx_keys.dedup();
    let mut rx_keys: Vec<i64> = records.iter().filter(|r| on_lattice(r.rx_deg)).map(|r| angle_key(r.rx_deg)).collect();
    rx_keys.sort_unstable();
    rx_keys.dedup();
    if rx_keys.is_empty() {
        return Err(Error::InvalidDataset("no receiver lies on the requested angular lattice".into()));
    }
    let tx_index: BTreeMap<i64, usize> = tx_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let rx_index: BTreeMap<i64, usize> = rx_keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let shape = (tx_keys.len(), rx_keys.len());

    let mut totals = vec![Array2::<Complex64>::zeros(shape); band.len()];
    let mut incs = vec![Array2::<Complex64>::zeros(shape); band.len()];
    let mut masks = vec![Array2::from_elem(shape, false); band.len()];
    for r in records {
        let Some(b) = band.iter().position(|&k| k == freq_key(r.freq_ghz)) else {
            continue;
        };
        let Some(&q) = rx_index.get(&angle_key(r.rx_deg)) else {
            continue;
        };
        if !on_lattice(r.rx_deg) {
            continue;
        }
        let p = tx_index[&angle_key(r.tx_deg)];
        totals[b][[p, q]] = r.total;
        incs[b][[p, q]] = r.incident;
        masks[b][[p, q]] = true;
    }
    if masks.iter().any(|m| m != &masks[0]) {
        return Err(Error::InvalidDataset("receiver coverage differs between frequencies".into()));
    }
    let to_deg = |k: i64| k as f64 * ANGLE_TOL_DEG;
    let layout = ArrayLayout::new(
        tx_keys.iter().map(|&k| angle_position(to_deg(k), FRESNEL_RADIUS)).collect(),
        rx_keys.iter().map(|&k| angle_position(to_deg(k), FRESNEL_RADIUS)).collect(),
        masks[0].clone(),
    )
    .map_err(|e| Error::InvalidDataset(e.to_string()))?;

    let mut e_meas = Vec::with_capacity(band.len());
    let mut e_inc_rx = Vec::with_capacity(band.len());
    for b in 0..band.len() {
        let cal = calibrate(&totals[b], &incs[b], &layout, wavenumber(band[b] as f64 * 1e9))?;
        e_meas.push(cal.scattered);
        e_inc_rx.push(cal.incident);
    }
    let label: Vec<String> = band.iter().map(|k| k.to_string()).collect();
    let ds = Dataset {
        header: DatasetHeader {
            schema_version: DATASET_SCHEMA,
            kind: DatasetKind::Measured,
            description: format!("FoamTwinDielTM_{}", label.concat()),
            frequencies: band.iter().map(|&k| k as f64 * 1e9).collect(),
            layout,
            roi_half_width: FRESNEL_ROI_HALF_WIDTH,
            generation: None,
            reference: Some(foam_twin_diel_reference()),
        },
        e_meas,
        e_inc_rx,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Geometry-only records: 18 transmitters, receivers from +60° to +300°
    /// in 1° steps, fields filled from a simple formula.
    fn synthetic_records(freqs: &[f64]) -> Vec<RawFresnelRecord> {
        let mut out = Vec::new();
        for &f in freqs {
            for t in 0..18 {
                let tx = 20.0 * t as f64;
                for k in 0..241 {
                    let rx = (tx + 60.0 + k as f64).rem_euclid(360.0);
                    let inc = Complex64::from_polar(1.0 + 0.01 * k as f64, 0.02 * rx + f);
                    out.push(RawFresnelRecord {
                        tx_deg: tx,
                        rx_deg: rx,
                        freq_ghz: f,
                        total: inc + Complex64::new(1e-3 * t as f64, 1e-3),
                        incident: inc,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn full_structure_parses() {
        let freqs: Vec<f64> = (2..=10).map(f64::from).collect();
        let recs = synthetic_records(&freqs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("FoamTwinDielTM.exp");
        write_fresnel(&path, &recs, "synthetic").unwrap();
        let parsed = parse_fresnel(&path).unwrap();
        assert_eq!(parsed.len(), 18 * 241 * 9);
        assert_eq!(parsed, recs);
    }

    #[test]
    fn empty_and_malformed_inputs() {
        assert!(matches!(parse_fresnel_str("# only a comment\n\n", None), Err(Error::Integrity(_))));
        let err = parse_fresnel_str("# c\n0 60 3 1 0 1 0\n0 61 3 1 zero 1 0\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(matches!(parse_fresnel_str("0 60 3 1 0 1\n", None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_fresnel_str("0 60 11 1 0 1 0\n", None), Err(Error::Parse { .. })));
        assert!(matches!(parse_fresnel_str("0 360 3 1 0 1 0\n", None), Err(Error::Parse { .. })));
    }

    #[test]
    fn wrong_count_is_an_integrity_error() {
        let mut recs = synthetic_records(&[3.0, 4.0]);
        recs.pop();
        let s = FresnelStructure {
            n_tx: 18,
            n_rx: 241,
            n_freq: 2,
        };
        assert!(matches!(check_structure(&recs, s), Err(Error::Integrity(_))));
    }

    #[test]
    fn band_subsampling_shapes() {
        let recs = synthetic_records(&[3.0, 4.0, 5.0, 6.0]);
        let ds = subsample_and_split(&recs, 5.0, &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(ds.header.frequencies, vec![3e9, 4e9, 5e9]);
        assert_eq!(ds.header.layout.n_tx(), 18);
        assert_eq!(ds.header.layout.n_rx(), 72);
        assert!(ds.header.layout.active_per_tx().iter().all(|&n| n == 49));
        assert_eq!(ds.header.description, "FoamTwinDielTM_345");
        assert!(subsample_and_split(&recs, 5.0, &[11.0]).is_err());
        assert!(subsample_and_split(&recs, 5.0, &[7.0]).is_err());
    }

    #[test]
    fn calibration_inverts_a_known_factor() {
        let recs = synthetic_records(&[3.0]);
        let ds = subsample_and_split(&recs, 5.0, &[3.0]).unwrap();
        let layout = &ds.header.layout;
        let k0 = wavenumber(3e9);
        let sim = incident_fields_at(layout, k0).unwrap();
        let scat = Array2::from_shape_fn(sim.dim(), |(p, q)| {
            if layout.mask[[p, q]] {
                Complex64::new(0.01 * p as f64, -0.003 * q as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let factor: Vec<Complex64> = (0..18).map(|p| Complex64::from_polar(2.0 + p as f64, 0.3 * p as f64)).collect();
        let mut tot = Array2::zeros(sim.dim());
        let mut inc = Array2::zeros(sim.dim());
        for ((p, q), v) in sim.indexed_iter() {
            inc[[p, q]] = v / factor[p];
            tot[[p, q]] = (v + scat[[p, q]]) / factor[p];
        }
        let cal = calibrate(&tot, &inc, layout, k0).unwrap();
        for (a, b) in cal.scattered.iter().zip(&scat) {
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-3));
        }
        for (c, f) in cal.factors.iter().zip(&factor) {
            assert!((c - f).norm() < 1e-10 * f.norm());
        }
        assert!(cal.magnitude_spread.iter().all(|&s| (s - 1.0).abs() < 1e-9));

        // Already calibrated data calibrates with factor 1.
        let again = calibrate(&(&sim + &scat), &sim, layout, k0).unwrap();
        assert!(again.factors.iter().all(|c| (c - 1.0).norm() < 1e-12));

        let mut dead = inc.clone();
        let q_ref = cal.reference[0];
        dead[[0, q_ref]] = Complex64::new(0.0, 0.0);
        assert!(calibrate(&tot, &dead, layout, k0).is_err());
    }

    #[test]
    fn reference_receiver_is_opposite_transmitter() {
        let recs = synthetic_records(&[3.0]);
        let ds = subsample_and_split(&recs, 5.0, &[3.0]).unwrap();
        let layout = &ds.header.layout;
        let cal = calibrate(&ds.e_inc_rx[0], &ds.e_inc_rx[0], layout, wavenumber(3e9)).unwrap();
        for (p, &q) in cal.reference.iter().enumerate() {
            let d = angular_distance(angle_of(layout.rx[q]), angle_of(layout.tx[p]) + 180.0);
            assert!(d < 1e-6);
        }
    }
}

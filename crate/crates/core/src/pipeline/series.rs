//! Marker pose series, strain extraction and their CSV formats.

use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::liealg::{log_se3, Pose, ScrewVector};
use crate::spectra::StrainGrid;

const POSE_HEADER: [&str; 14] = [
    "t", "n", "R00", "R01", "R02", "R10", "R11", "R12", "R20", "R21", "R22", "px", "py", "pz",
];
const STRAIN_HEADER: [&str; 8] = ["t", "s", "kx", "ky", "kz", "sx", "sy", "sz"];
const BASE_TOL: f64 = 1e-9;
const SPACING_TOL: f64 = 1e-6;

/// Poses `g(nλ_s, mT_s)` of `N` markers over `M` frames, in the frame of
/// the base marker.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSeries {
    poses: Vec<Pose>,
    markers: usize,
    frames: usize,
    lambda_s: f64,
    t_s: f64,
}

impl PoseSeries {
    /// One inner vector of marker poses per frame. Marker 0 must be the
    /// identity in every frame; see [`PoseSeries::rebased`].
    pub fn new(frames: Vec<Vec<Pose>>, lambda_s: f64, t_s: f64) -> Result<Self> {
        let markers = frames.first().map_or(0, Vec::len);
        if frames.is_empty() || markers < 2 {
            return Err(Error::invalid("pose series needs a frame with at least two markers"));
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != markers) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: markers,
            });
        }
        for (name, v) in [("lambda_s", lambda_s), ("T_s", t_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (m, frame) in frames.iter().enumerate() {
            for pose in frame {
                pose.validate()?;
            }
            let base = &frame[0];
            let dev = (base.rotation - Matrix3::identity()).amax().max(base.position.amax());
            if dev > BASE_TOL {
                return Err(Error::invalid(format!(
                    "base marker of frame {m} is not the identity (deviation {dev:.3e})"
                )));
            }
        }
        let count = frames.len();
        Ok(PoseSeries {
            poses: frames.into_iter().flatten().collect(),
            markers,
            frames: count,
            lambda_s,
            t_s,
        })
    }

    /// Expresses every marker relative to marker 0 of its frame.
    pub fn rebased(frames: Vec<Vec<Pose>>, lambda_s: f64, t_s: f64) -> Result<Self> {
        let frames = frames
            .into_iter()
            .map(|f| match f.first().copied() {
                Some(base) => f.iter().map(|g| base.relative_to(g)).collect(),
                None => f,
            })
            .collect();
        Self::new(frames, lambda_s, t_s)
    }

    pub fn markers(&self) -> usize {
        self.markers
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn t_s(&self) -> f64 {
        self.t_s
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.frames).map(|m| m as f64 * self.t_s).collect()
    }

    /// Marker `n` in frame `m`.
    pub fn pose(&self, n: usize, m: usize) -> &Pose {
        &self.poses[m * self.markers + n]
    }

    pub fn frame(&self, m: usize) -> &[Pose] {
        &self.poses[m * self.markers..(m + 1) * self.markers]
    }

    /// `t,n,R00..R22,px,py,pz`, frame by frame.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(POSE_HEADER)?;
        for m in 0..self.frames {
            let t = m as f64 * self.t_s;
            for (n, g) in self.frame(m).iter().enumerate() {
                let mut row = vec![t.to_string(), n.to_string()];
                for i in 0..3 {
                    for j in 0..3 {
                        row.push(g.rotation[(i, j)].to_string());
                    }
                }
                row.extend(g.position.iter().map(f64::to_string));
                out.write_record(&row)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the format of [`PoseSeries::write_csv`]. With two or more
    /// frames the time column must agree with `t_s`.
    pub fn read_csv<R: Read>(reader: R, lambda_s: f64, t_s: f64) -> Result<Self> {
        let rows = read_rows(reader, &POSE_HEADER)?;
        let (times, frames) = group_frames(&rows)?;
        check_spacing("T_s", &times, t_s, 0.0)?;
        let frames = frames
            .into_iter()
            .map(|frame| {
                frame
                    .iter()
                    .enumerate()
                    .map(|(n, row)| {
                        if row[1] != n as f64 {
                            return Err(Error::invalid(format!("expected marker {n}, found {}", row[1])));
                        }
                        Pose::new(
                            Matrix3::from_row_slice(&row[2..11]),
                            Vector3::new(row[11], row[12], row[13]),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, lambda_s, t_s)
    }
}

fn read_rows<R: Read>(reader: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::invalid(format!(
            "expected CSV header {}, found {}",
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("row {}: cannot parse {f:?} as a number", i + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::invalid(format!("row {} has {} fields", i + 2, row.len())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid("CSV has no data rows"));
    }
    Ok(rows)
}

/// Splits rows into consecutive runs sharing the first column.
type Frames<'a> = (Vec<f64>, Vec<&'a [Vec<f64>]>);

fn group_frames(rows: &[Vec<f64>]) -> Result<Frames<'_>> {
    let mut times = Vec::new();
    let mut frames = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i][0] != rows[start][0] {
            times.push(rows[start][0]);
            frames.push(&rows[start..i]);
            start = i;
        }
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("frames must appear in increasing time order"));
    }
    Ok((times, frames))
}

/// Checks `values[i] ≈ (i + offset)·step`.
fn check_spacing(name: &str, values: &[f64], step: f64, offset: f64) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        let expected = (i as f64 + offset) * step;
        if (v - expected).abs() > SPACING_TOL * step.max(expected.abs()) {
            return Err(Error::invalid(format!(
                "{name} spacing: sample {i} at {v}, expected {expected}"
            )));
        }
    }
    Ok(())
}

/// `ξ = log(g_n⁻¹g_{n+1})∨/λ_s` between consecutive markers, attributed to
/// the midpoints `(n + ½)λ_s`. The grid covers `(N − 1)λ_s`.
pub fn extract_strain(series: &PoseSeries) -> Result<StrainGrid> {
    let (n_m, lambda) = (series.markers, series.lambda_s);
    let mut samples = Vec::with_capacity(series.frames * (n_m - 1));
    for m in 0..series.frames {
        let frame = series.frame(m);
        for n in 0..n_m - 1 {
            let xi = log_se3(&frame[n].relative_to(&frame[n + 1])).map_err(|e| match e {
                Error::SingularRotation { .. } => Error::SingularRotationAt {
                    marker: n,
                    next: n + 1,
                    frame: m,
                },
                other => other,
            })?;
            samples.push(xi * (1.0 / lambda));
        }
    }
    StrainGrid::from_flat(
        samples,
        series.frames,
        n_m - 1,
        lambda,
        series.t_s,
        (n_m - 1) as f64 * lambda,
    )?
    .with_abscissa_offset(0.5)
}

/// `t,s,kx,ky,kz,sx,sy,sz`, frame by frame.
pub fn write_strain_csv<W: Write>(grid: &StrainGrid, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(STRAIN_HEADER)?;
    let s = grid.abscissae();
    for (m, t) in grid.times().iter().enumerate() {
        for (n, sn) in s.iter().enumerate() {
            let mut row = vec![t.to_string(), sn.to_string()];
            row.extend(grid.sample(m, n).to_array().iter().map(f64::to_string));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads the format of [`write_strain_csv`]. The abscissa offset comes
/// from the first `s`, rounded to 12 decimals of `λ_s`; with two or more
/// frames the time column must agree with `t_s`.
pub fn read_strain_csv<R: Read>(reader: R, lambda_s: f64, t_s: f64, length: f64) -> Result<StrainGrid> {
    let rows = read_rows(reader, &STRAIN_HEADER)?;
    let (times, frames) = group_frames(&rows)?;
    check_spacing("T_s", &times, t_s, 0.0)?;
    let s: Vec<f64> = frames[0].iter().map(|r| r[1]).collect();
    if !(lambda_s > 0.0 && lambda_s.is_finite()) {
        return Err(Error::invalid("lambda_s must be positive"));
    }
    let offset = (s[0] / lambda_s * 1e12).round() / 1e12;
    check_spacing("lambda_s", &s, lambda_s, offset)?;
    let mut samples = Vec::with_capacity(rows.len());
    for frame in &frames {
        if frame.len() != s.len() {
            return Err(Error::LengthMismatch {
                left: frame.len(),
                right: s.len(),
            });
        }
        for (row, sn) in frame.iter().zip(&s) {
            if row[1] != *sn {
                return Err(Error::invalid(format!("abscissa {} differs from first frame", row[1])));
            }
            let mut v = [0.0; 6];
            v.copy_from_slice(&row[2..8]);
            samples.push(ScrewVector::new(v));
        }
    }
    StrainGrid::from_flat(samples, frames.len(), s.len(), lambda_s, t_s, length)?.with_abscissa_offset(offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvs::{forward_kinematics, uniform_grid, BasisDictionary};
    use crate::liealg::exp_se3;
    use crate::rodmodel::RodProperties;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn chain(strains: &[ScrewVector], lambda: f64) -> Vec<Pose> {
        let mut g = Pose::identity();
        let mut out = vec![g];
        for xi in strains {
            g = g.compose(&exp_se3(xi, lambda));
            out.push(g);
        }
        out
    }

    #[test]
    fn straight_rod_gives_unit_stretch() {
        let frame: Vec<Pose> = (0..5)
            .map(|n| Pose::from_translation(Vector3::new(0.1 * n as f64, 0.0, 0.0)))
            .collect();
        let grid = extract_strain(&PoseSeries::new(vec![frame], 0.1, 0.01).unwrap()).unwrap();
        assert_eq!(grid.points(), 4);
        assert!((grid.length() - 0.4).abs() < 1e-15);
        let s = grid.abscissae();
        assert!((s[0] - 0.05).abs() < 1e-15 && (s[3] - 0.35).abs() < 1e-15);
        for n in 0..4 {
            let xi = grid.sample(0, n);
            assert!((xi - ScrewVector::new([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])).max_abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn extraction_inverts_piecewise_constant_chains(
            raw in prop::collection::vec(prop::array::uniform6(-2.0f64..2.0), 2..8),
        ) {
            let lambda = 0.1;
            let strains: Vec<ScrewVector> = raw.into_iter().map(ScrewVector::new).collect();
            let series = PoseSeries::new(vec![chain(&strains, lambda)], lambda, 1.0).unwrap();
            let grid = extract_strain(&series).unwrap();
            for (n, xi) in strains.iter().enumerate() {
                prop_assert!((grid.sample(0, n) - *xi).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extraction_is_second_order_on_smooth_strain() {
        let rod = RodProperties::desk_cylinder();
        let dict = BasisDictionary::polynomial(rod.length, 2).unwrap();
        let q = DVector::from_vec(vec![
            0.3, 1.0, -0.8, 0.5, 0.4, 0.2, -0.2, 0.6, 0.1, 0.01, 0.0, 0.02, 0.0, 0.01, 0.0, 0.0, 0.0, 0.01,
        ]);
        let exact = |s: f64| dict.deformation(&q, s) + rod.stress_free(s);
        let error = |markers: usize| {
            let lambda = rod.length / (markers - 1) as f64;
            // Fine FK so the marker poses are exact to well below the
            // discretisation error being measured.
            let sub = 64;
            let grid = uniform_grid(rod.length, (markers - 1) * sub);
            let poses = forward_kinematics(&dict, &q, &rod, &grid).unwrap();
            let frame: Vec<Pose> = poses.iter().step_by(sub).copied().collect();
            let strain = extract_strain(&PoseSeries::new(vec![frame], lambda, 1.0).unwrap()).unwrap();
            strain
                .abscissae()
                .iter()
                .enumerate()
                .map(|(n, &s)| (strain.sample(0, n) - exact(s)).max_abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (error(11), error(21));
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "{coarse} {fine} {ratio}");
    }

    #[test]
    fn singular_rotation_is_located() {
        let half_turn = ScrewVector::new([std::f64::consts::PI / 0.1, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let strains = [ScrewVector::new([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]), half_turn];
        let ok = chain(&strains[..1], 0.1);
        let bad = chain(&strains, 0.1);
        let ok3 = vec![ok[0], ok[1], ok[1].compose(&Pose::from_translation(Vector3::x() * 0.1))];
        let series = PoseSeries::new(vec![ok3, bad], 0.1, 0.5).unwrap();
        match extract_strain(&series) {
            Err(Error::SingularRotationAt { marker, next, frame }) => {
                assert_eq!((marker, next, frame), (1, 2, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_identity_base() {
        let moved = vec![Pose::from_translation(Vector3::x()), Pose::identity()];
        assert!(PoseSeries::new(vec![moved.clone()], 0.1, 1.0).is_err());
        let series = PoseSeries::rebased(vec![moved], 0.1, 1.0).unwrap();
        assert!((series.pose(1, 0).position + Vector3::x()).norm() < 1e-15);
    }

    #[test]
    fn pose_csv_round_trip_is_exact() {
        let strains = [
            ScrewVector::new([0.3, -1.2, 0.7, 1.0, 0.1, -0.05]),
            ScrewVector::new([1.1, 0.4, -0.2, 0.9, 0.0, 0.2]),
        ];
        let frames = vec![chain(&strains, 0.1), chain(&[strains[1], strains[0]], 0.1)];
        let series = PoseSeries::new(frames, 0.1, 0.02).unwrap();
        let mut buf = Vec::new();
        series.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,n,R00,R01,R02,R10,R11,R12,R20,R21,R22,px,py,pz\n"));
        let back = PoseSeries::read_csv(buf.as_slice(), 0.1, 0.02).unwrap();
        assert_eq!(back, series);
        assert!(PoseSeries::read_csv(buf.as_slice(), 0.1, 0.03).is_err());
    }

    #[test]
    fn strain_csv_round_trip_is_exact() {
        let strains = [
            ScrewVector::new([0.3, -1.2, 0.7, 1.0, 0.1, -0.05]),
            ScrewVector::new([1.1, 0.4, -0.2, 0.9, 0.0, 0.2]),
            ScrewVector::new([0.0, 0.0, 0.5, 1.0, 0.0, 0.0]),
        ];
        let series = PoseSeries::new(vec![chain(&strains, 0.1); 3], 0.1, 0.25).unwrap();
        let grid = extract_strain(&series).unwrap();
        let mut buf = Vec::new();
        write_strain_csv(&grid, &mut buf).unwrap();
        let back = read_strain_csv(buf.as_slice(), 0.1, 0.25, grid.length()).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(PoseSeries::read_csv("t,n\n0,0\n".as_bytes(), 0.1, 1.0).is_err());
        let bad = "t,s,kx,ky,kz,sx,sy,sz\n0,0.05,0,0,0,1,0,0\n0,0.15,0,0,x,1,0,0\n";
        assert!(read_strain_csv(bad.as_bytes(), 0.1, 1.0, 0.2).is_err());
        let uneven = "t,s,kx,ky,kz,sx,sy,sz\n0,0.05,0,0,0,1,0,0\n0,0.15,0,0,0,1,0,0\n0,0.3,0,0,0,1,0,0\n";
        assert!(read_strain_csv(uneven.as_bytes(), 0.1, 1.0, 0.4).is_err());
    }
}

//! Quantum monodromy as a lattice defect: transport of an elementary cell
//! of the joint spectrum around the isolated critical value at
//! `(l_z, g) = (0, 0)`.
//!
//! The joint spectrum is locally a ℤ² lattice in the `(l_z, g)` plane.
//! A cell anchored at a lattice point with frame vectors `u` (one step
//! within the column) and `v` (one step to the adjacent column) is carried
//! along a closed waypoint loop: at each step every cell corner is
//! translated by the base displacement and snapped to the nearest
//! eigenvalue of its target column. Snapping must be unambiguous and must
//! echo back to its source under the reverse displacement, so a transport
//! that completes is locally consistent and exactly reversible. Around a
//! loop that encircles the critical value the returning frame differs from
//! the initial one by a unimodular matrix with `|trace| = 2` — the lattice
//! defect; every contractible loop returns the identity.

use serde::Serialize;

use crate::model::OscillatorParams;
use crate::reduction::{hopf_and_singular_fiber, HopfVerdict};
use crate::spectrum::{joint_spectrum, JointSpectrum};
use crate::{tol, Error, Result};

/// A lattice point of the joint spectrum: column `m`, rank within the
/// ascending column.
pub type LatticePoint = (i64, usize);

/// A closed loop of lattice-adjacent waypoints in the joint spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeLoop {
    /// Closed waypoint list; first equals last, consecutive columns differ
    /// by at most one.
    pub waypoints: Vec<LatticePoint>,
    /// Whether the `(l_z, g)` polygon of the waypoints winds around the
    /// origin.
    pub encloses_origin: bool,
    /// Orientation of the frame: `true` anchors the cell upward (`u` raises
    /// the rank), `false` downward.
    pub frame_up: bool,
}

impl LatticeLoop {
    /// Validate a waypoint list against a spectrum and compute the winding
    /// flag.
    pub fn from_waypoints(
        spectrum: &JointSpectrum,
        waypoints: Vec<LatticePoint>,
        frame_up: bool,
    ) -> Result<Self> {
        if waypoints.len() < 4 {
            return Err(Error::InvalidInput("a loop needs at least four waypoints".into()));
        }
        if waypoints.first() != waypoints.last() {
            return Err(Error::InvalidInput("loop is not closed".into()));
        }
        for pair in waypoints.windows(2) {
            if (pair[0].0 - pair[1].0).abs() > 1 {
                return Err(Error::InvalidInput(format!(
                    "waypoints {:?} and {:?} are not lattice-adjacent",
                    pair[0], pair[1]
                )));
            }
        }
        for &(m, rank) in &waypoints {
            let col = spectrum
                .column(m)
                .ok_or_else(|| Error::InvalidInput(format!("no column m = {m}")))?;
            if rank >= col.len() {
                return Err(Error::InvalidInput(format!(
                    "rank {rank} outside column m = {m} of length {}",
                    col.len()
                )));
            }
        }
        let encloses_origin = winding_number(spectrum, &waypoints) != 0;
        Ok(Self { waypoints, encloses_origin, frame_up })
    }
}

fn position(spectrum: &JointSpectrum, pt: LatticePoint) -> [f64; 2] {
    [
        spectrum.params.hbar * pt.0 as f64,
        spectrum.column(pt.0).expect("validated column")[pt.1],
    ]
}

fn winding_number(spectrum: &JointSpectrum, waypoints: &[LatticePoint]) -> i64 {
    let mut total = 0.0;
    for pair in waypoints.windows(2) {
        let [x1, y1] = position(spectrum, pair[0]);
        let [x2, y2] = position(spectrum, pair[1]);
        total += (x1 * y2 - y1 * x2).atan2(x1 * x2 + y1 * y2);
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

/// Snap a predicted `g` to the nearest eigenvalue of column `m`.
///
/// Fails when the column is missing or the two best candidates are within
/// the ambiguity tolerance of each other.
fn snap(spectrum: &JointSpectrum, m: i64, g_predicted: f64) -> Option<usize> {
    let col = spectrum.column(m)?;
    if col.is_empty() {
        return None;
    }
    let mut best = 0;
    let mut d_best = f64::MAX;
    let mut d_second = f64::MAX;
    for (i, &g) in col.iter().enumerate() {
        let d = (g - g_predicted).abs();
        if d < d_best {
            d_second = d_best;
            d_best = d;
            best = i;
        } else if d < d_second {
            d_second = d;
        }
    }
    if col.len() > 1 && d_second - d_best < tol::MATCH_AMBIGUITY * d_second.max(1e-300) {
        return None;
    }
    Some(best)
}

/// The result of transporting an elementary cell around a loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyResult {
    /// Monodromy matrix in the initial frame basis.
    pub matrix: [[i64; 2]; 2],
    pub trace: i64,
    pub det: i64,
    /// Cell corners `(base, u-end, v-end)` at each waypoint.
    pub path: Vec<[LatticePoint; 3]>,
    /// `true` iff the matrix differs from the identity.
    pub defect_detected: bool,
}

impl MonodromyResult {
    /// Whether the matrix is conjugate over the integers to the elementary
    /// transvection `[[1, 1], [0, 1]]` or its inverse: `det = 1`,
    /// `trace = 2`, non-identity, and `M − I` has content one.
    pub fn is_elementary_transvection(&self) -> bool {
        if self.det != 1 || self.trace != 2 || !self.defect_detected {
            return false;
        }
        let m = &self.matrix;
        let entries = [m[0][0] - 1, m[0][1], m[1][0], m[1][1] - 1];
        let gcd = entries.iter().fold(0i64, |acc, &v| gcd(acc, v.abs()));
        gcd == 1
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Transport an elementary cell around a loop and return the monodromy
/// matrix in the initial frame basis.
///
/// The initial frame at the base waypoint is `u` = one rank step in the
/// frame direction and `v` = the nearest eigenvalue of the next column,
/// biased by a fraction of the local spacing so that both aligned and
/// staggered lattices resolve it. Every subsequent snap is guarded: a tie
/// between candidates or a failed reverse-echo aborts with a transport
/// error naming the waypoint instead of guessing.
pub fn transport_cell(spectrum: &JointSpectrum, lattice_loop: &LatticeLoop) -> Result<MonodromyResult> {
    let waypoints = &lattice_loop.waypoints;
    if waypoints.len() < 2 {
        return Err(Error::InvalidInput("empty loop".into()));
    }
    let base = waypoints[0];
    let (m0, r0) = base;
    let col0 = spectrum
        .column(m0)
        .ok_or_else(|| Error::InvalidInput(format!("no column m = {m0}")))?;
    let dir: isize = if lattice_loop.frame_up { 1 } else { -1 };
    let r_u = r0 as isize + dir;
    if r_u < 0 || r_u as usize >= col0.len() {
        return Err(Error::Domain(format!(
            "no room for the frame step at the base waypoint ({m0}, {r0})"
        )));
    }
    let u_end: LatticePoint = (m0, r_u as usize);
    let g0 = col0[r0];
    let spacing = col0[r_u as usize] - g0;
    let v_rank = snap(spectrum, m0 + 1, g0 + tol::FRAME_BIAS * spacing).ok_or_else(|| {
        Error::Numerics(format!("ambiguous cross-column frame at base waypoint ({m0}, {r0})"))
    })?;
    let v_end: LatticePoint = (m0 + 1, v_rank);
    let frame0 = (u_end, v_end);

    let mut corners = [base, u_end, v_end];
    let mut path = Vec::with_capacity(waypoints.len());
    path.push(corners);
    for (step, &next_base) in waypoints.iter().enumerate().skip(1) {
        // Base displacement; the column shift is integer, so only the
        // g-component carries geometry.
        let dg = position(spectrum, next_base)[1] - position(spectrum, corners[0])[1];
        let dm = next_base.0 - corners[0].0;
        let mut next = [next_base, next_base, next_base];
        for (slot, &corner) in next.iter_mut().zip(corners.iter()).skip(1) {
            // The target column is fixed by the integer step, so only the
            // g-coordinate needs predicting.
            let cy = position(spectrum, corner)[1];
            let m_target = corner.0 + dm;
            let rank = snap(spectrum, m_target, cy + dg).ok_or_else(|| {
                Error::Numerics(format!(
                    "ambiguous nearest-neighbor match at waypoint {step} toward column {m_target}"
                ))
            })?;
            let landed: LatticePoint = (m_target, rank);
            // reverse echo: the landing point must map back onto the source
            let [_, ly] = position(spectrum, landed);
            let back = snap(spectrum, corner.0, ly - dg).ok_or_else(|| {
                Error::Numerics(format!("ambiguous reverse match at waypoint {step}"))
            })?;
            if back != corner.1 {
                return Err(Error::Numerics(format!(
                    "transport inconsistency at waypoint {step}: forward and reverse \
                     matches disagree in column {m_target}"
                )));
            }
            *slot = landed;
        }
        corners = next;
        path.push(corners);
    }

    // Express initial and final frames as integer vectors at the base and
    // solve U0 · M = UN.
    let (_, u_fin, v_fin) = (corners[0], corners[1], corners[2]);
    let u0 = [frame0.0 .0 - m0, frame0.0 .1 as i64 - r0 as i64];
    let v0 = [frame0.1 .0 - m0, frame0.1 .1 as i64 - r0 as i64];
    let un = [u_fin.0 - m0, u_fin.1 as i64 - r0 as i64];
    let vn = [v_fin.0 - m0, v_fin.1 as i64 - r0 as i64];
    let det0 = u0[0] * v0[1] - u0[1] * v0[0];
    if det0.abs() != 1 {
        return Err(Error::Numerics(format!(
            "initial frame is not unimodular (det {det0})"
        )));
    }
    // inverse of [[u0x, v0x], [u0y, v0y]] times [[unx, vnx], [uny, vny]]
    let inv = [[v0[1] * det0, -v0[0] * det0], [-u0[1] * det0, u0[0] * det0]];
    let matrix = [
        [
            inv[0][0] * un[0] + inv[0][1] * un[1],
            inv[0][0] * vn[0] + inv[0][1] * vn[1],
        ],
        [
            inv[1][0] * un[0] + inv[1][1] * un[1],
            inv[1][0] * vn[0] + inv[1][1] * vn[1],
        ],
    ];
    let trace = matrix[0][0] + matrix[1][1];
    let det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    let defect_detected = matrix != [[1, 0], [0, 1]];
    Ok(MonodromyResult { matrix, trace, det, path, defect_detected })
}

/// A monodromy verdict with its context.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyReport {
    pub n: u32,
    /// Shell energy `ħω(n + 3/2)`.
    pub e: f64,
    pub result: MonodromyResult,
    pub lattice_loop: LatticeLoop,
    /// Classical Hopf verdict at the shell energy.
    pub hopf: HopfVerdict,
    /// Agreement between the lattice detection and the classical predicate
    /// `E > ω²a²/2`.
    pub matches_classical_prediction: bool,
}

/// Rows of a rectangle loop: per column, the bottom and top ranks.
struct LoopRows {
    bottom: Vec<usize>,
    top: Vec<usize>,
    width: i64,
}

impl LoopRows {
    fn to_waypoints(&self) -> Vec<LatticePoint> {
        let w = self.width;
        let idx = |m: i64| (m + w) as usize;
        let mut wp: Vec<LatticePoint> = Vec::new();
        for m in -w..=w {
            wp.push((m, self.bottom[idx(m)]));
        }
        for r in self.bottom[idx(w)] + 1..=self.top[idx(w)] {
            wp.push((w, r));
        }
        for m in (-w..w).rev() {
            wp.push((m, self.top[idx(m)]));
        }
        for r in (self.bottom[idx(-w)]..self.top[idx(-w)]).rev() {
            wp.push((-w, r));
        }
        wp
    }
}

/// Candidate loops that encircle the origin: widths from `min(n/2, 5)` down,
/// both frame directions, padding variants around `g = 0`.
fn enclosing_candidates(
    spectrum: &JointSpectrum,
    h: usize,
) -> Vec<LatticeLoop> {
    let n = spectrum.n;
    let mut out = Vec::new();
    let w_max = (i64::from(n) / 2).min(5).max(1);
    for width in (1..=w_max).rev() {
        for frame_up in [true, false] {
            for pad_top in [h, h + 1, 1] {
                for pad_bottom in [h, 1] {
                    let mut rows = LoopRows {
                        bottom: Vec::new(),
                        top: Vec::new(),
                        width,
                    };
                    let mut ok = true;
                    for m in -width..=width {
                        let col = match spectrum.column(m) {
                            Some(c) => c,
                            None => {
                                ok = false;
                                break;
                            }
                        };
                        let len = col.len();
                        let last_neg = col.iter().rposition(|&g| g < 0.0);
                        let first_pos = col.iter().position(|&g| g > 0.0);
                        let (last_neg, first_pos) = match (last_neg, first_pos) {
                            (Some(a), Some(b)) => (a, b),
                            _ => {
                                ok = false;
                                break;
                            }
                        };
                        // Frame clearance: one extra rank above (up) or
                        // below (down) every waypoint.
                        let (lo, hi) = if frame_up { (0, len.saturating_sub(2)) } else { (1, len - 1) };
                        let bottom = last_neg.saturating_sub(pad_bottom - 1).max(lo);
                        let top = (first_pos + (pad_top - 1)).min(hi);
                        if bottom > last_neg || top < first_pos || top <= bottom || bottom < lo {
                            ok = false;
                            break;
                        }
                        rows.bottom.push(bottom);
                        rows.top.push(top);
                    }
                    if !ok {
                        continue;
                    }
                    if let Ok(lp) =
                        LatticeLoop::from_waypoints(spectrum, rows.to_waypoints(), frame_up)
                    {
                        if lp.encloses_origin {
                            out.push(lp);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Fallback loops in the interior of the lattice, not enclosing the origin.
fn interior_candidates(spectrum: &JointSpectrum, h: usize) -> Vec<LatticeLoop> {
    let n = spectrum.n;
    let mut out = Vec::new();
    let w_max = (i64::from(n) / 2).min(5).max(1);
    for width in (1..=w_max).rev() {
        for frame_up in [true, false] {
            let mut rows = LoopRows { bottom: Vec::new(), top: Vec::new(), width };
            let mut ok = true;
            for m in -width..=width {
                let col = match spectrum.column(m) {
                    Some(c) => c,
                    None => {
                        ok = false;
                        break;
                    }
                };
                let len = col.len();
                let (lo, hi) = if frame_up { (0isize, len as isize - 2) } else { (1, len as isize - 1) };
                if hi - lo < 2 * h as isize {
                    ok = false;
                    break;
                }
                let center = (lo + hi) / 2;
                let bottom = (center - h as isize).clamp(lo, hi - 2 * h as isize);
                rows.bottom.push(bottom as usize);
                rows.top.push((bottom + 2 * h as isize) as usize);
            }
            if !ok {
                continue;
            }
            if let Ok(lp) = LatticeLoop::from_waypoints(spectrum, rows.to_waypoints(), frame_up) {
                if !lp.encloses_origin {
                    out.push(lp);
                }
            }
        }
    }
    out
}

/// Detect the lattice defect at shell `n` with a default rectangular loop
/// around the origin, falling back to an interior loop when the spectrum
/// has no states on both sides of `g = 0` across the needed columns.
///
/// `loop_radius_hint` sets the preferred rank padding of the loop around
/// `g = 0` (default 2 when `None`).
pub fn monodromy_report(
    params: &OscillatorParams,
    n: u32,
    loop_radius_hint: Option<usize>,
) -> Result<MonodromyReport> {
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "n = {n} gives too few lattice points to form a loop; need n >= 4"
        )));
    }
    let h = loop_radius_hint.unwrap_or(2).max(1);
    let spectrum = joint_spectrum(params, n)?;
    let e = params.shell_energy(n);
    let hopf = hopf_and_singular_fiber(params, e);
    let mut last_err: Option<Error> = None;
    for lp in enclosing_candidates(&spectrum, h) {
        match transport_cell(&spectrum, &lp) {
            Ok(result) => {
                let matches = result.defect_detected == hopf.pinched;
                return Ok(MonodromyReport {
                    n,
                    e,
                    result,
                    lattice_loop: lp,
                    hopf,
                    matches_classical_prediction: matches,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    for lp in interior_candidates(&spectrum, h) {
        match transport_cell(&spectrum, &lp) {
            Ok(result) => {
                let matches = result.defect_detected == hopf.pinched;
                return Ok(MonodromyReport {
                    n,
                    e,
                    result,
                    lattice_loop: lp,
                    hopf,
                    matches_classical_prediction: matches,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::Domain(format!(
            "spectrum at n = {n} is too sparse to build any transport loop; try larger n"
        ))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(n: u32, a: f64) -> JointSpectrum {
        let params = OscillatorParams::new(a, 1.0, 1.0).unwrap();
        joint_spectrum(&params, n).unwrap()
    }

    #[test]
    fn defect_for_fig5_parameters() {
        let params = OscillatorParams::new(1.5, 1.0, 1.0).unwrap();
        let report = monodromy_report(&params, 20, None).unwrap();
        assert!(report.result.defect_detected);
        assert_eq!(report.result.det, 1);
        assert_eq!(report.result.trace.abs(), 2);
        assert!(report.result.is_elementary_transvection());
        assert!(report.lattice_loop.encloses_origin);
        assert!(report.hopf.pinched);
        assert!(report.matches_classical_prediction);
    }

    #[test]
    fn identity_for_large_focal_distance() {
        let params = OscillatorParams::new(10.0, 1.0, 1.0).unwrap();
        let report = monodromy_report(&params, 20, None).unwrap();
        assert!(!report.result.defect_detected);
        assert_eq!(report.result.matrix, [[1, 0], [0, 1]]);
        assert!(!report.lattice_loop.encloses_origin);
        assert!(!report.hopf.pinched);
        assert!(report.matches_classical_prediction);
    }

    #[test]
    fn contractible_loop_gives_identity() {
        let js = spectrum(20, 1.5);
        // a small square far from the origin
        let col3 = js.column(3).unwrap();
        let target = 60.0;
        let r3 = col3
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - target).abs().partial_cmp(&(b.1 - target).abs()).unwrap()
            })
            .unwrap()
            .0;
        let g3 = col3[r3];
        let r4 = snap(&js, 4, g3 + 0.45 * (col3[r3 + 1] - g3)).unwrap();
        let wp = vec![(3, r3), (4, r4), (4, r4 + 1), (3, r3 + 1), (3, r3)];
        let lp = LatticeLoop::from_waypoints(&js, wp, true).unwrap();
        assert!(!lp.encloses_origin);
        let result = transport_cell(&js, &lp).unwrap();
        assert_eq!(result.matrix, [[1, 0], [0, 1]]);
        assert!(!result.defect_detected);
    }

    #[test]
    fn unimodularity_and_base_point_independence() {
        let js = spectrum(20, 2.0);
        let lp = enclosing_candidates(&js, 2)
            .into_iter()
            .next()
            .expect("enclosing loop exists at a = 2");
        let base = transport_cell(&js, &lp).unwrap();
        assert_eq!(base.det.abs(), 1);
        let rotations = [3usize, 9, 15];
        let mut checked = 0;
        for k in rotations {
            let mut wp = lp.waypoints[k..lp.waypoints.len() - 1].to_vec();
            wp.extend_from_slice(&lp.waypoints[..=k]);
            let rotated = LatticeLoop::from_waypoints(&js, wp, lp.frame_up).unwrap();
            match transport_cell(&js, &rotated) {
                Ok(r) => {
                    assert_eq!(r.trace, base.trace, "trace differs from base point {k}");
                    assert_eq!(r.det, base.det);
                    checked += 1;
                }
                Err(Error::Numerics(_)) => {} // ambiguous frame at that base is a legal refusal
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(checked >= 2, "too few rotated bases succeeded");
    }

    #[test]
    fn reversing_the_loop_inverts_the_matrix() {
        let js = spectrum(20, 2.0);
        let lp = enclosing_candidates(&js, 2).into_iter().next().unwrap();
        let forward = transport_cell(&js, &lp).unwrap();
        let mut wp = lp.waypoints.clone();
        wp.reverse();
        let reversed = LatticeLoop::from_waypoints(&js, wp, lp.frame_up).unwrap();
        let backward = transport_cell(&js, &reversed).unwrap();
        let m = forward.matrix;
        let r = backward.matrix;
        let product = [
            [
                m[0][0] * r[0][0] + m[0][1] * r[1][0],
                m[0][0] * r[0][1] + m[0][1] * r[1][1],
            ],
            [
                m[1][0] * r[0][0] + m[1][1] * r[1][0],
                m[1][0] * r[0][1] + m[1][1] * r[1][1],
            ],
        ];
        assert_eq!(product, [[1, 0], [0, 1]]);
    }

    #[test]
    fn loop_validation_errors() {
        let js = spectrum(8, 1.5);
        assert!(LatticeLoop::from_waypoints(&js, vec![(0, 0), (0, 1)], true).is_err());
        assert!(
            LatticeLoop::from_waypoints(&js, vec![(0, 0), (2, 0), (0, 1), (0, 0)], true).is_err()
        );
        assert!(
            LatticeLoop::from_waypoints(&js, vec![(0, 0), (1, 99), (0, 1), (0, 0)], true)
                .is_err()
        );
        let params = OscillatorParams::new(1.5, 1.0, 1.0).unwrap();
        assert!(matches!(monodromy_report(&params, 2, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn defect_scan_small_shell() {
        // n = 12 keeps this quick; threshold at a² = 2E = 27
        for (a, expect) in [(2.5, true), (8.0, false)] {
            let params = OscillatorParams::new(a, 1.0, 1.0).unwrap();
            let report = monodromy_report(&params, 12, None).unwrap();
            assert_eq!(report.result.defect_detected, expect, "a = {a}");
            assert!(report.matches_classical_prediction);
        }
    }
}

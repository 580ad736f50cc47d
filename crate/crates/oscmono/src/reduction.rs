//! The singularly reduced one-degree-of-freedom picture on the Casimir
//! surface `C = 0`, the admissible range of the separation constant, the
//! Hamiltonian Hopf threshold, and symplectic volumes with quantum counts.
//!
//! Reducing by the flows of `H` and `L_z` leaves the invariants `(R, X, Y)`
//! constrained to `C = 4ω²(H − ωR)²(R² − L_z²) − ω²(X² + Y²) = 0`, a surface
//! homeomorphic to a sphere with singular points at `R = E/ω` (always) and
//! `R = 0` (when `l_z = 0`). The dynamics of `G` on that surface is read off
//! from the slice `Y = 0`, where the surface boundary is
//! `X = ±2(E − ωR)√(R² − l_z²)` over `R ∈ [|l_z|, E/ω]` and contours of `G`
//! are the lines `X = ω(g − l_z² + 2R²) + 2(a²ω² − E)R`.

use serde::Serialize;

use crate::model::OscillatorParams;
use crate::{Error, Result};

/// The `Y = 0` slice of the reduced phase space with `G`-contours.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedSlice {
    pub e: f64,
    pub lz: f64,
    /// `(R, X)` polyline of the boundary: the `X ≥ 0` half followed by the
    /// mirrored `X ≤ 0` half, forming the closed topological circle.
    pub boundary: Vec<[f64; 2]>,
    /// Requested `G = g` contour lines with their boundary intersections.
    pub contours: Vec<ContourIntersections>,
    /// Singular points of the reduced space: `(E/ω, 0)` always, `(0, 0)`
    /// when `l_z = 0`.
    pub singular_points: Vec<[f64; 2]>,
}

/// Intersections of one `G = g` contour with the reduced-space boundary in
/// the `Y = 0` slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourIntersections {
    pub g: f64,
    /// Intersection points `(R, X)`; 0, 1, or 2 of them.
    pub points: Vec<[f64; 2]>,
    /// Whether the contour passes through a singular point of the surface.
    pub hits_singular_point: bool,
}

/// Boundary of the reduced surface in the `Y = 0` slice, upper half.
fn boundary_x(e: f64, omega: f64, lz: f64, r: f64) -> f64 {
    2.0 * (e - omega * r) * (r * r - lz * lz).max(0.0).sqrt()
}

/// Contour line of `G = g` in the `Y = 0` slice.
fn contour_x(params: &OscillatorParams, e: f64, lz: f64, g: f64, r: f64) -> f64 {
    let w = params.omega;
    w * (g - lz * lz + 2.0 * r * r) + 2.0 * (params.a * params.a * w * w - e) * r
}

/// Sample the reduced phase space slice and intersect it with contours.
pub fn reduced_slice(
    params: &OscillatorParams,
    e: f64,
    lz: f64,
    resolution: usize,
    contour_gs: &[f64],
) -> Result<ReducedSlice> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!("resolution {resolution} must be at least 2")));
    }
    let w = params.omega;
    if lz.abs() > e / w {
        return Err(Error::Domain(format!("|l_z| = {} exceeds E/ω = {}", lz.abs(), e / w)));
    }
    let r_lo = lz.abs();
    let r_hi = e / w;
    let mut upper: Vec<[f64; 2]> = (0..=resolution)
        .map(|i| {
            let r = r_lo + (r_hi - r_lo) * i as f64 / resolution as f64;
            [r, boundary_x(e, w, lz, r)]
        })
        .collect();
    let lower: Vec<[f64; 2]> = upper.iter().rev().skip(1).map(|&[r, x]| [r, -x]).collect();
    upper.extend(lower);

    let mut singular_points = vec![[r_hi, 0.0]];
    if lz == 0.0 {
        singular_points.push([0.0, 0.0]);
    }

    let scale = (e / w).max(1.0);
    let tol = 1e-10 * scale * scale;
    let mut contours = Vec::with_capacity(contour_gs.len());
    for &g in contour_gs {
        // Intersections of the contour with each boundary half, located by
        // sign changes of the difference on a fine grid plus bisection.
        let mut points: Vec<[f64; 2]> = Vec::new();
        for sign in [1.0, -1.0] {
            let diff = |r: f64| sign * boundary_x(e, w, lz, r) - contour_x(params, e, lz, g, r);
            let n = resolution.max(256);
            let mut prev_r = r_lo;
            let mut prev_d = diff(prev_r);
            for i in 1..=n {
                let r = r_lo + (r_hi - r_lo) * i as f64 / n as f64;
                let d = diff(r);
                if prev_d == 0.0 || prev_d * d < 0.0 {
                    let (mut a, mut b) = (prev_r, r);
                    for _ in 0..100 {
                        let m = 0.5 * (a + b);
                        if diff(a) * diff(m) <= 0.0 {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    let r_hit = 0.5 * (a + b);
                    points.push([r_hit, sign * boundary_x(e, w, lz, r_hit)]);
                }
                prev_r = r;
                prev_d = d;
            }
        }
        // Merge duplicates where the two halves meet at X = 0 endpoints.
        points.sort_by(|p, q| p[0].partial_cmp(&q[0]).unwrap());
        points.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-8 * scale && (p[1] - q[1]).abs() < 1e-7 * scale * scale);
        let hits_singular_point = points.iter().any(|p| {
            singular_points
                .iter()
                .any(|s| (p[0] - s[0]).abs() < tol.sqrt() && (p[1] - s[1]).abs() < tol.sqrt())
        });
        contours.push(ContourIntersections { g, points, hits_singular_point });
    }
    Ok(ReducedSlice { e, lz, boundary: upper, contours, singular_points })
}

/// Admissible range of the separation constant at fixed `(E, l_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GRange {
    /// `g_min = l_z² − 2a²E`, attained at the singular point `R = E/ω`.
    pub g_min: f64,
    /// `g_max`, where the contour is tangent to the boundary.
    pub g_max: f64,
}

/// The value of `G` on the boundary of the reduced surface at parameter `R`,
/// taking the `X ≥ 0` half which carries the maximum.
fn g_on_boundary(params: &OscillatorParams, e: f64, lz: f64, r: f64) -> f64 {
    let w = params.omega;
    lz * lz - 2.0 * r * r - 2.0 / w * (params.a * params.a * w * w - e) * r
        + boundary_x(e, w, lz, r) / w
}

/// Compute the admissible `[g_min, g_max]` at fixed energy and `l_z`.
///
/// `g_min` is exact; `g_max` maximizes `G` along the boundary by
/// golden-section search refined with a parabolic step, and agrees with the
/// double-root branch of the separation module.
pub fn g_range(params: &OscillatorParams, e: f64, lz: f64) -> Result<GRange> {
    let w = params.omega;
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidInput(format!("energy {e} must be positive")));
    }
    if lz.abs() > e / w {
        return Err(Error::Domain(format!("|l_z| = {} exceeds E/ω = {}", lz.abs(), e / w)));
    }
    let g_min = lz * lz - 2.0 * params.a * params.a * e;
    let (mut lo, mut hi) = (lz.abs(), e / w);
    if hi - lo < 1e-14 * hi.max(1.0) {
        return Ok(GRange { g_min, g_max: g_min });
    }
    // Golden-section maximization of g along the boundary.
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = g_on_boundary(params, e, lz, x1);
    let mut f2 = g_on_boundary(params, e, lz, x2);
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g_on_boundary(params, e, lz, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g_on_boundary(params, e, lz, x1);
        }
        if hi - lo < 1e-13 * (e / w).max(1.0) {
            break;
        }
    }
    let r_best = 0.5 * (lo + hi);
    let mut g_max = g_on_boundary(params, e, lz, r_best);
    // One parabolic refinement through three nearby samples.
    let h = 1e-6 * (e / w).max(1.0);
    let r_lo_lim = lz.abs();
    let r_hi_lim = e / w;
    if r_best - h > r_lo_lim && r_best + h < r_hi_lim {
        let fm = g_on_boundary(params, e, lz, r_best - h);
        let fp = g_on_boundary(params, e, lz, r_best + h);
        let denom = fm - 2.0 * g_max + fp;
        if denom < 0.0 {
            let step = 0.5 * h * (fm - fp) / denom;
            let r_ref = (r_best + step).clamp(r_lo_lim, r_hi_lim);
            let g_ref = g_on_boundary(params, e, lz, r_ref);
            if g_ref > g_max {
                g_max = g_ref;
            }
        }
    }
    // The boundary endpoints are admissible maxima too (g_max = 0 at the
    // R = 0 singular point below the Hopf energy, l_z = 0).
    let g_end_lo = g_on_boundary(params, e, lz, r_lo_lim);
    let g_end_hi = g_on_boundary(params, e, lz, r_hi_lim);
    g_max = g_max.max(g_end_lo).max(g_end_hi);
    Ok(GRange { g_min, g_max })
}

/// The Hamiltonian Hopf threshold and the pinched-torus verdict at one
/// energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfVerdict {
    /// Critical energy `E_c = ω²a²/2` (the potential energy at the foci).
    pub e_critical: f64,
    /// Whether the fiber over `(l_z, g) = (0, 0)` is a pinched torus, i.e.
    /// `E > E_c`.
    pub pinched: bool,
}

/// Evaluate the Hopf threshold `E_c = ω²a²/2` and whether the singular
/// fiber at energy `e` is pinched.
pub fn hopf_and_singular_fiber(params: &OscillatorParams, e: f64) -> HopfVerdict {
    let e_critical = params.hopf_energy();
    HopfVerdict { e_critical, pinched: e > e_critical }
}

/// Symplectic volume of the reduced phase space with quantum state counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeReport {
    /// `Vol = (π/ω)(E − ω|l_z|)`.
    pub volume: f64,
    /// Mean state count `Vol/(2πħ)`.
    pub weyl_count: f64,
    /// Exact count when `(E, l_z)` sit on the quantum grid
    /// `E = ħω(n + 3/2)`, `l_z = ħm`; absent otherwise.
    pub exact_count: Option<u64>,
}

/// Exact number of joint states at quantum numbers `(n, m)`:
/// `(n + 2 − |m|)/2` when `n − |m|` is even, `(n + 1 − |m|)/2` when odd.
pub fn exact_state_count(n: u32, m: i64) -> u64 {
    let m_abs = m.unsigned_abs() as u32;
    if m_abs > n {
        return 0;
    }
    if (n - m_abs) % 2 == 0 {
        u64::from(n + 2 - m_abs) / 2
    } else {
        u64::from(n + 1 - m_abs) / 2
    }
}

/// Total number of states in shell `n`: `(n + 1)(n + 2)/2`.
pub fn total_states(n: u32) -> u64 {
    u64::from(n + 1) * u64::from(n + 2) / 2
}

/// Compute the reduced symplectic volume at fixed `(E, l_z)` together with
/// the Weyl estimate and, on the quantum grid, the exact count.
pub fn symplectic_volume(params: &OscillatorParams, e: f64, lz: f64) -> Result<VolumeReport> {
    let w = params.omega;
    if e < w * lz.abs() {
        return Err(Error::Domain(format!("E = {e} below ω|l_z| = {}", w * lz.abs())));
    }
    let volume = std::f64::consts::PI / w * (e - w * lz.abs());
    let weyl_count = volume / (2.0 * std::f64::consts::PI * params.hbar);
    // On-grid detection: E = ħω(n + 3/2) and l_z = ħm for integers n ≥ 0, m.
    let n_real = e / (params.hbar * w) - 1.5;
    let m_real = lz / params.hbar;
    let n_round = n_real.round();
    let m_round = m_real.round();
    let on_grid = (n_real - n_round).abs() < 1e-9 * (1.0 + n_real.abs())
        && (m_real - m_round).abs() < 1e-9 * (1.0 + m_real.abs())
        && n_round >= 0.0
        && m_round.abs() <= n_round;
    let exact_count = if on_grid {
        Some(exact_state_count(n_round as u32, m_round as i64))
    } else {
        None
    };
    Ok(VolumeReport { volume, weyl_count, exact_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::separation::critical_loci;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> OscillatorParams {
        OscillatorParams::new(1.0, 1.0, 1.0).unwrap()
    }

    /// Casimir residual of a slice point `(R, X)` with `Y = 0`.
    fn casimir_on_slice(e: f64, w: f64, lz: f64, r: f64, x: f64) -> f64 {
        4.0 * w * w * (e - w * r).powi(2) * (r * r - lz * lz) - w * w * x * x
    }

    #[test]
    fn boundary_lies_on_casimir_surface() {
        let params = OscillatorParams::new(1.3, 0.8, 1.0).unwrap();
        let slice = reduced_slice(&params, 4.0, 0.7, 200, &[]).unwrap();
        for &[r, x] in &slice.boundary {
            let c = casimir_on_slice(4.0, params.omega, 0.7, r, x);
            let scale = params.omega * params.omega * (x * x + 1.0);
            assert!(c.abs() < 1e-10 * scale.max(1.0), "C = {c} at (R, X) = ({r}, {x})");
        }
    }

    #[test]
    fn boundary_endpoint_and_singular_points() {
        let params = unit_params();
        let slice = reduced_slice(&params, 4.0, 0.5, 100, &[]).unwrap();
        // X vanishes at R = E/ω on the boundary
        let near_end = slice
            .boundary
            .iter()
            .filter(|p| (p[0] - 4.0).abs() < 1e-9)
            .collect::<Vec<_>>();
        assert!(!near_end.is_empty());
        for p in near_end {
            assert!(p[1].abs() < 1e-9);
        }
        assert_eq!(slice.singular_points, vec![[4.0, 0.0]]);
        // l_z = 0 adds the singular point at the origin
        let slice0 = reduced_slice(&params, 4.0, 0.0, 100, &[]).unwrap();
        assert_eq!(slice0.singular_points, vec![[4.0, 0.0], [0.0, 0.0]]);
        assert!(slice0.boundary.iter().any(|p| p[0].abs() < 1e-12 && p[1].abs() < 1e-12));
    }

    #[test]
    fn contour_intersection_counts() {
        let params = unit_params();
        let e = 4.0;
        let range = g_range(&params, e, 0.5).unwrap();
        let g_mid = 0.5 * (range.g_min + range.g_max);
        let g_above = range.g_max + 1.0;
        let slice = reduced_slice(&params, e, 0.5, 400, &[g_mid, g_above]).unwrap();
        assert_eq!(slice.contours[0].points.len(), 2, "interior contour cuts twice");
        assert_eq!(slice.contours[1].points.len(), 0, "contour above g_max misses");
    }

    #[test]
    fn pinched_contour_hits_origin() {
        // g = 0, l_z = 0, E above the Hopf energy: the contour passes
        // through the singular point R = 0.
        let params = unit_params();
        let slice = reduced_slice(&params, 4.0, 0.0, 400, &[0.0]).unwrap();
        assert!(slice.contours[0].hits_singular_point);
        assert!(slice.contours[0]
            .points
            .iter()
            .any(|p| p[0].abs() < 1e-6 && p[1].abs() < 1e-6));
    }

    #[test]
    fn g_range_examples() {
        let params = unit_params();
        let r = g_range(&params, 4.0, 0.0).unwrap();
        assert!((r.g_min + 8.0).abs() < 1e-12);
        assert!((r.g_max - 49.0 / 4.0).abs() < 1e-8, "g_max = {}", r.g_max);
        let r = g_range(&params, 4.0, 1.0).unwrap();
        assert!((r.g_min + 7.0).abs() < 1e-12);
        assert!((r.g_max - 11.965_914_134_243_251).abs() < 1e-8, "g_max = {}", r.g_max);
        // degenerate corner |l_z| = E/ω
        let r = g_range(&params, 4.0, 4.0).unwrap();
        assert!((r.g_min - (16.0 - 8.0)).abs() < 1e-12);
        assert!((r.g_max - r.g_min).abs() < 1e-10);
        // below the Hopf energy at l_z = 0 the maximum sits at g = 0
        let r = g_range(&params, 0.25, 0.0).unwrap();
        assert!((r.g_min + 0.5).abs() < 1e-12);
        assert!(r.g_max.abs() < 1e-10, "g_max = {}", r.g_max);
        assert!(matches!(g_range(&params, 4.0, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn g_max_matches_double_root_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..60 {
            let params =
                OscillatorParams::new(rng.gen_range(0.4..1.6), rng.gen_range(0.6..1.6), 1.0)
                    .unwrap();
            let e = rng.gen_range(0.5..6.0);
            let lz = rng.gen_range(0.05..0.9) * e / params.omega;
            let range = g_range(&params, e, lz).unwrap();
            // invert l_z²(d) on the branch and read g(d)
            let loci = critical_loci(&params, e).unwrap();
            let target = lz * lz;
            let mut lo = loci.d_start();
            let mut hi = lo + 1.0;
            while loci.upper_lz2(hi) < target {
                hi *= 1.5;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if loci.upper_lz2(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let g_branch = loci.upper_g(0.5 * (lo + hi));
            assert!(
                (range.g_max - g_branch).abs() < 1e-8 * (1.0 + g_branch.abs()),
                "golden {} vs branch {}",
                range.g_max,
                g_branch
            );
            assert!(range.g_min <= range.g_max);
        }
    }

    #[test]
    fn boundary_points_satisfy_g_and_casimir() {
        // substituting a boundary point into the reduced form of G and then
        // into the Casimir returns zero
        let params = OscillatorParams::new(0.9, 1.2, 1.0).unwrap();
        let (e, lz) = (3.0, 0.4);
        let slice = reduced_slice(&params, e, lz, 150, &[]).unwrap();
        for &[r, x] in &slice.boundary {
            let g = lz * lz - 2.0 * r * r
                - 2.0 / params.omega * (params.a * params.a * params.omega * params.omega - e) * r
                + x / params.omega;
            // the contour through that g passes through (r, x) by construction
            let xc = contour_x(&params, e, lz, g, r);
            assert!((xc - x).abs() < 1e-9 * (1.0 + x.abs()));
            let c = casimir_on_slice(e, params.omega, lz, r, x);
            assert!(c.abs() < 1e-10 * (1.0 + x * x));
        }
    }

    #[test]
    fn hopf_examples() {
        let params = unit_params();
        let v = hopf_and_singular_fiber(&params, 4.0);
        assert!((v.e_critical - 0.5).abs() < 1e-15);
        assert!(v.pinched);
        let params = OscillatorParams::new(1.5, 1.0, 1.0).unwrap();
        assert!(hopf_and_singular_fiber(&params, 21.5).pinched);
        let params = OscillatorParams::new(10.0, 1.0, 1.0).unwrap();
        assert!(!hopf_and_singular_fiber(&params, 21.5).pinched);
    }

    #[test]
    fn volume_examples() {
        let params = unit_params();
        // n = 10, m = 0: Weyl 5.75, exact 6
        let e = params.shell_energy(10);
        let rep = symplectic_volume(&params, e, 0.0).unwrap();
        assert!((rep.weyl_count - 5.75).abs() < 1e-12);
        assert_eq!(rep.exact_count, Some(6));
        // n = 11, m = 0: odd case (11 + 1)/2 = 6
        let rep = symplectic_volume(&params, params.shell_energy(11), 0.0).unwrap();
        assert_eq!(rep.exact_count, Some(6));
        // volume vanishes at the corner
        let rep = symplectic_volume(&params, 3.0, 3.0).unwrap();
        assert!(rep.volume.abs() < 1e-12);
        // off-grid values report no exact count
        let rep = symplectic_volume(&params, 3.1, 0.2).unwrap();
        assert_eq!(rep.exact_count, None);
        assert!(matches!(symplectic_volume(&params, 1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn counts_sum_and_interpolation() {
        for n in 0..=30u32 {
            let total: u64 = (-(n as i64)..=n as i64).map(|m| exact_state_count(n, m)).sum();
            assert_eq!(total, total_states(n), "n = {n}");
            for m in -(n as i64)..=n as i64 {
                let weyl = (f64::from(n) + 1.5 - m.abs() as f64) / 2.0;
                let exact = exact_state_count(n, m) as f64;
                assert!((weyl - exact).abs() <= 0.5, "n = {n}, m = {m}");
            }
        }
        assert_eq!(total_states(20), 231);
        assert_eq!(total_states(0), 1);
        assert_eq!(total_states(2), 6);
    }
}

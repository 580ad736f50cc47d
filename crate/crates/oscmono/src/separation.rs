//! The separation polynomial `P(s)`, its roots and discriminant, the
//! critical loci of the energy-momentum map, region classification,
//! caustic data, and constant-energy slices of the bifurcation diagram.
//!
//! Separating `H = E` in prolate spheroidal coordinates `(ξ, η, φ)` reduces
//! both nontrivial degrees of freedom to one even polynomial of degree six,
//!
//! `P(s) = −l_z² + 2a²(1 − s²) [ (E − a²ω²s²/2)(1 − s²) + g/(2a²) ]`,
//!
//! through `p_ξ² = P(ξ)/(ξ² − 1)²` and `p_η² = P(η)/(η² − 1)²`. Roots of `P`
//! in `[−1, 1]` are turning points of `η`, roots in `[1, ∞)` turning points
//! of `ξ`; collisions of roots are critical values of the energy-momentum
//! map. Stored as a cubic in `u = s²`.

use num_complex::Complex64;
use serde::Serialize;

use crate::model::{MotionValues, OscillatorParams};
use crate::{tol, Error, Result};

/// The degree-six even polynomial `P(s)`, stored as a cubic in `u = s²`:
/// `P = c₀ + c₁u + c₂u² + c₃u³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationPolynomial {
    /// Coefficients `[c₀, c₁, c₂, c₃]` of the cubic in `u = s²`.
    pub coeffs: [f64; 4],
    pub params: OscillatorParams,
    pub vals: MotionValues,
}

/// Build the separation polynomial for given constants of motion.
///
/// The coefficients in `u = s²` are
/// `c₀ = 2a²E + g − l_z²`, `c₁ = −(4a²E + a⁴ω² + g)`,
/// `c₂ = 2a²E + 2a⁴ω²`, `c₃ = −a⁴ω²`.
pub fn separation_polynomial(params: &OscillatorParams, vals: &MotionValues) -> SeparationPolynomial {
    let a2 = params.a * params.a;
    let a4w2 = a2 * a2 * params.omega * params.omega;
    let MotionValues { e, lz, g } = *vals;
    SeparationPolynomial {
        coeffs: [
            2.0 * a2 * e + g - lz * lz,
            -(4.0 * a2 * e + a4w2 + g),
            2.0 * a2 * e + 2.0 * a4w2,
            -a4w2,
        ],
        params: *params,
        vals: *vals,
    }
}

impl SeparationPolynomial {
    /// Evaluate the cubic at `u`.
    pub fn eval_u(&self, u: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        c0 + u * (c1 + u * (c2 + u * c3))
    }

    /// Evaluate `P(s)`.
    pub fn eval_s(&self, s: f64) -> f64 {
        self.eval_u(s * s)
    }

    /// Derivative of the cubic in `u`.
    pub fn deriv_u(&self, u: f64) -> f64 {
        let [_, c1, c2, c3] = self.coeffs;
        c1 + u * (2.0 * c2 + u * 3.0 * c3)
    }

    /// Largest coefficient magnitude, the natural scale for residual checks.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A real root of `P(s)` with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedRoot {
    pub s: f64,
    pub multiplicity: usize,
}

/// Reality pattern of the three `u`-roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Disposition {
    /// All `u`-roots real and nonnegative: six real roots in `s`.
    AllRealNonnegative,
    /// All `u`-roots real, `count` of them negative (purely imaginary `s`).
    RealWithNegative { count: usize },
    /// One real `u`-root and a complex-conjugate pair.
    ComplexPair,
}

/// Roots of the separation polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    /// The three roots of the cubic in `u = s²`, sorted by real part.
    pub u_roots: [Complex64; 3],
    /// Signed real roots in `s` with multiplicities, ascending.
    pub s_roots: Vec<SignedRoot>,
    pub disposition: Disposition,
}

impl RootSet {
    /// Real `u`-roots within tolerance, ascending.
    pub fn real_u(&self) -> Vec<f64> {
        self.u_roots
            .iter()
            .filter(|u| u.im.abs() < tol::REAL_ROOT * (1.0 + u.norm()))
            .map(|u| u.re)
            .collect()
    }

    /// Total multiplicity over real `s`-roots plus non-real ones; always six.
    pub fn multiplicity_sum(&self) -> usize {
        let real: usize = self.s_roots.iter().map(|r| r.multiplicity).sum();
        // Each complex or negative u contributes a non-real pair in s.
        let nonreal: usize = self
            .u_roots
            .iter()
            .map(|u| {
                let imaginary_u = u.im.abs() >= tol::REAL_ROOT * (1.0 + u.norm());
                let negative_u = u.re < -tol::REAL_ROOT * (1.0 + u.norm());
                if imaginary_u || negative_u {
                    2
                } else {
                    0
                }
            })
            .sum();
        real + nonreal
    }
}

/// Solve the cubic `c₀ + c₁u + c₂u² + c₃u³ = 0` by the trigonometric /
/// Cardano method, then polish each root with one Newton step.
fn cubic_roots(c: [f64; 4]) -> [Complex64; 3] {
    let [c0, c1, c2, c3] = c;
    debug_assert!(c3 != 0.0, "leading coefficient is −a⁴ω² < 0");
    // Normalize to u³ + pu² + qu + r.
    let p = c2 / c3;
    let q = c1 / c3;
    let r = c0 / c3;
    // Depressed cubic t³ + at + b with u = t − p/3.
    let shift = p / 3.0;
    let a = q - p * p / 3.0;
    let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let disc = -(4.0 * a * a * a + 27.0 * b * b);
    let mut roots = if disc >= 0.0 {
        // Three real roots: trigonometric form.
        if a.abs() < 1e-300 {
            let t = (-b).cbrt();
            [Complex64::new(t, 0.0); 3]
        } else {
            let m = 2.0 * (-a / 3.0).sqrt();
            let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            let mut out = [Complex64::new(0.0, 0.0); 3];
            for (k, slot) in out.iter_mut().enumerate() {
                let t = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                *slot = Complex64::new(t, 0.0);
            }
            out
        }
    } else {
        // One real root, one conjugate pair: Cardano with stable real part.
        let half_b = b / 2.0;
        let inner = (half_b * half_b + a * a * a / 27.0).sqrt();
        let s1 = (-half_b + inner).cbrt();
        let s2 = (-half_b - inner).cbrt();
        let t_real = s1 + s2;
        let re = -t_real / 2.0;
        let im = (s1 - s2) * 3.0_f64.sqrt() / 2.0;
        [
            Complex64::new(t_real, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    };
    for root in &mut roots {
        *root -= shift;
        // One Newton polish step on the original cubic.
        for _ in 0..2 {
            let u = *root;
            let f = Complex64::new(c0, 0.0) + u * (c1 + u * (c2 + u * c3));
            let df = Complex64::new(c1, 0.0) + u * (2.0 * c2 + u * 3.0 * c3);
            if df.norm() > 1e-300 {
                let step = f / df;
                if step.norm() < 0.5 * (1.0 + u.norm()) {
                    *root = u - step;
                }
            }
        }
    }
    roots.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()));
    roots
}

/// Find and classify the roots of `P(s)`.
///
/// For `l_z = 0` the cubic factors as `(1 − u)` times a quadratic, and the
/// closed forms are used; otherwise the general cubic solve applies. Complex
/// roots are reported, never rejected.
pub fn polynomial_roots(poly: &SeparationPolynomial) -> RootSet {
    let u_roots = if poly.vals.lz == 0.0 {
        // P = (1 − u) (a⁴ω²u² − (2a²E + a⁴ω²)u + (2a²E + g)) up to sign.
        let a2 = poly.params.a * poly.params.a;
        let w2 = poly.params.omega * poly.params.omega;
        let a4w2 = a2 * a2 * w2;
        let e = poly.vals.e;
        let g = poly.vals.g;
        let half_sum = (2.0 * a2 * e + a4w2) / (2.0 * a4w2);
        let disc = (a2 * w2 - 2.0 * e).powi(2) - 4.0 * g * w2;
        let mut roots = [Complex64::new(1.0, 0.0); 3];
        if disc >= 0.0 {
            let d = disc.sqrt() / (2.0 * a2 * w2);
            roots[1] = Complex64::new(half_sum - d, 0.0);
            roots[2] = Complex64::new(half_sum + d, 0.0);
        } else {
            let d = (-disc).sqrt() / (2.0 * a2 * w2);
            roots[1] = Complex64::new(half_sum, -d);
            roots[2] = Complex64::new(half_sum, d);
        }
        roots.sort_by(|x, y| {
            x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap())
        });
        roots
    } else {
        cubic_roots(poly.coeffs)
    };

    let mut real_u: Vec<f64> = Vec::new();
    let mut complex_pair = false;
    for u in &u_roots {
        if u.im.abs() < tol::REAL_ROOT * (1.0 + u.norm()) {
            real_u.push(u.re);
        } else {
            complex_pair = true;
        }
    }
    real_u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n_negative = real_u.iter().filter(|&&u| u < -tol::REAL_ROOT * (1.0 + u.abs())).count();

    // Merge coincident u-roots, then map u → ±√u.
    let scale = real_u.iter().fold(1.0_f64, |m, u| m.max(u.abs()));
    let mut merged: Vec<(f64, usize)> = Vec::new();
    for &u in &real_u {
        match merged.last_mut() {
            Some((v, mult)) if (u - *v).abs() < tol::COINCIDENT_ROOT * scale => {
                *v = (*v * *mult as f64 + u) / (*mult as f64 + 1.0);
                *mult += 1;
            }
            _ => merged.push((u, 1)),
        }
    }
    let mut s_roots: Vec<SignedRoot> = Vec::new();
    for &(u, mult) in &merged {
        if u < -tol::REAL_ROOT * (1.0 + u.abs()) {
            continue;
        }
        if u.abs() <= tol::REAL_ROOT * scale {
            // u = 0 collapses ±√u into one root of doubled multiplicity.
            s_roots.push(SignedRoot { s: 0.0, multiplicity: 2 * mult });
        } else {
            let s = u.max(0.0).sqrt();
            s_roots.push(SignedRoot { s: -s, multiplicity: mult });
            s_roots.push(SignedRoot { s, multiplicity: mult });
        }
    }
    s_roots.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());

    let disposition = if complex_pair {
        Disposition::ComplexPair
    } else if n_negative > 0 {
        Disposition::RealWithNegative { count: n_negative }
    } else {
        Disposition::AllRealNonnegative
    };
    RootSet { u_roots, s_roots, disposition }
}

/// Closed-form discriminant of `P(s)` with respect to `s`.
///
/// `discrim(P) = 64 a¹²ω² (2a²E + g − l_z²) · F²` where `F` collects the
/// second nonconstant factor; its zero set is the bifurcation diagram.
pub fn discriminant(params: &OscillatorParams, vals: &MotionValues) -> f64 {
    let (a, w) = (params.a, params.omega);
    let (e, lz, g) = (vals.e, vals.lz, vals.g);
    let (a2, w2) = (a * a, w * w);
    let (lz2, g2) = (lz * lz, g * g);
    let f = 4.0 * a2.powi(4) * lz2 * w2.powi(3) - 24.0 * a2.powi(3) * e * lz2 * w2 * w2
        - a2 * a2 * g2 * w2 * w2
        - 18.0 * a2 * a2 * g * lz2 * w2 * w2
        + 27.0 * a2 * a2 * lz2 * lz2 * w2 * w2
        + 48.0 * a2 * a2 * e * e * lz2 * w2
        + 4.0 * a2 * g2 * e * w2
        + 36.0 * a2 * g * e * lz2 * w2
        - 32.0 * a2 * e.powi(3) * lz2
        + 4.0 * g2 * g * w2
        - 4.0 * g2 * e * e;
    64.0 * a2.powi(6) * w2 * (2.0 * a2 * e + g - lz2) * f * f
}

/// Resultant `Res(P, P′)` in `s`, computed numerically from the Sylvester
/// matrix of the degree-six polynomial.
///
/// Related to [`discriminant`] by `discrim(P) = Res(P, P′) / (a⁴ω²)`; the
/// two vanish on the same set.
pub fn resultant(poly: &SeparationPolynomial) -> f64 {
    // P as degree-6 coefficients in s (ascending): even powers only.
    let [c0, c1, c2, c3] = poly.coeffs;
    let p = [c0, 0.0, c1, 0.0, c2, 0.0, c3];
    let dp = [0.0, 2.0 * c1, 0.0, 4.0 * c2, 0.0, 6.0 * c3];
    // Sylvester matrix: 5 shifted rows of p (deg 6), 6 shifted rows of dp (deg 5).
    let n = 11;
    let mut m = [[0.0_f64; 11]; 11];
    for row in 0..5 {
        for (k, &c) in p.iter().enumerate() {
            m[row][row + 6 - k] = c;
        }
    }
    for row in 0..6 {
        for (k, &c) in dp.iter().enumerate() {
            m[5 + row][row + 5 - k] = c;
        }
    }
    // LU with partial pivoting; product of pivots with sign.
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    det
}

/// The planar loci of double roots and the spatial critical branches at one
/// energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalLoci {
    pub params: OscillatorParams,
    pub e: f64,
    /// Planar locus `g = −2a²E`, the minimal `g` (orbit along the x axis).
    pub l1: f64,
    /// Planar locus `g = 0` (orbits through the foci).
    pub l2: f64,
    /// Planar locus `g = (a²ω² − 2E)²/(4ω²)` (double root `s₂ = s₃`).
    pub l3: f64,
    /// Isolated critical value at `(l_z, g) = (0, 0)`, present iff
    /// `E > ω²a²/2`.
    pub isolated_point: Option<[f64; 2]>,
    /// The upper branch has a kink at `l_z = 0` iff `E < ω²a²/2`.
    pub kink: bool,
}

/// Compute the critical loci at energy `e`.
pub fn critical_loci(params: &OscillatorParams, e: f64) -> Result<CriticalLoci> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidInput(format!("energy {e} must be positive")));
    }
    let (a, w) = (params.a, params.omega);
    let above_hopf = e > params.hopf_energy();
    Ok(CriticalLoci {
        params: *params,
        e,
        l1: -2.0 * a * a * e,
        l2: 0.0,
        l3: (a * a * w * w - 2.0 * e).powi(2) / (4.0 * w * w),
        isolated_point: above_hopf.then_some([0.0, 0.0]),
        kink: !above_hopf,
    })
}

impl CriticalLoci {
    /// The lower spatial branch `g = l_z² − 2a²E` (double root of `P` at 0).
    pub fn lower_g(&self, lz: f64) -> f64 {
        lz * lz - 2.0 * self.params.a * self.params.a * self.e
    }

    /// `g(d)` on the upper branch, parametrized by the double root `d ≥ 1`.
    pub fn upper_g(&self, d: f64) -> f64 {
        let (a, w) = (self.params.a, self.params.omega);
        let d2 = d * d;
        -a * a * (d2 - 1.0) * (a * a * w * w * (3.0 * d2 - 1.0) - 4.0 * self.e)
    }

    /// `l_z²(d)` on the upper branch.
    pub fn upper_lz2(&self, d: f64) -> f64 {
        let (a, w) = (self.params.a, self.params.omega);
        let d2 = d * d;
        a * a * (d2 - 1.0) * (d2 - 1.0) * (a * a * w * w * (2.0 * d2 - 1.0) - 2.0 * self.e)
    }

    /// Smallest `d ≥ 1` with `l_z²(d) ≥ 0`; the branch starts there.
    pub fn d_start(&self) -> f64 {
        let (a, w) = (self.params.a, self.params.omega);
        if self.e > self.params.hopf_energy() {
            (self.e / (a * a * w * w) + 0.5).sqrt()
        } else {
            1.0
        }
    }

    /// `d` at which `l_z²(d)` reaches the circular-orbit corner `(E/ω)²`,
    /// found by bisection on the monotone tail of the branch.
    pub fn d_max(&self) -> Result<f64> {
        let target = (self.e / self.params.omega).powi(2);
        let lo0 = self.d_start();
        let mut hi = (lo0 + 1.0) * 2.0;
        let mut guard = 0;
        while self.upper_lz2(hi) < target {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Numerics("upper branch never reaches the corner".into()));
            }
        }
        let mut lo = lo0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.upper_lz2(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Where in the bifurcation diagram a value of the constants of motion sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionLabel {
    /// Planar regions of the `(g, E)` half-plane (only III and IV carry
    /// physical motion).
    I,
    II,
    III,
    IV,
    V,
    BoundaryL1,
    BoundaryL2,
    BoundaryL3,
    /// Spatial (`l_z ≠ 0`) regular value.
    SpatialRegular,
    /// Spatial critical value (a double root of `P` within tolerance), and
    /// the degenerate z-axis orbit at `l_z = 0`, `g = 0`, `E < ω²a²/2`.
    SpatialCritical,
    /// No physical motion with these values.
    Nonphysical,
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegionLabel::I => "I",
            RegionLabel::II => "II",
            RegionLabel::III => "III",
            RegionLabel::IV => "IV",
            RegionLabel::V => "V",
            RegionLabel::BoundaryL1 => "boundary-L1",
            RegionLabel::BoundaryL2 => "boundary-L2",
            RegionLabel::BoundaryL3 => "boundary-L3",
            RegionLabel::SpatialRegular => "spatial-regular",
            RegionLabel::SpatialCritical => "spatial-critical",
            RegionLabel::Nonphysical => "nonphysical",
        };
        f.write_str(s)
    }
}

/// `P ≥ 0` somewhere in `[−1, 1]` and somewhere in `[1, ∞)`: the values
/// admit real motion in both separated degrees of freedom.
///
/// A simple root contributes no motion on its own (P is negative on both
/// sides), so each degree of freedom needs either an interval of strictly
/// positive P or a double root, which carries a critical circle. A root at
/// `u = 0` pins `η = 0` (motion in the equatorial plane) and counts for the
/// η side.
pub fn admissible(params: &OscillatorParams, vals: &MotionValues) -> bool {
    let poly = separation_polynomial(params, vals);
    let roots = polynomial_roots(&poly);
    let real_u = roots.real_u();
    let scale = 1.0 + real_u.iter().fold(0.0_f64, |m, u| m.max(u.abs()));
    let rtol = tol::COINCIDENT_ROOT * scale;
    let mut eta_ok = false;
    let mut xi_ok = false;
    // Strictly positive P between consecutive marks: P is negative beyond
    // the largest root (leading coefficient −a⁴ω²), so segment midpoints of
    // [0, 1] and [1, u_max] cover every positivity interval.
    let mut marks: Vec<f64> = vec![0.0, 1.0];
    marks.extend(real_u.iter().copied().filter(|&u| u > rtol));
    marks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for pair in marks.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        if poly.eval_u(mid) > 0.0 {
            if mid <= 1.0 {
                eta_ok = true;
            } else {
                xi_ok = true;
            }
        }
    }
    // Critical circles: double roots, and the equatorial root at u = 0.
    for root in &roots.s_roots {
        let u = root.s * root.s;
        if root.s == 0.0 {
            eta_ok = true;
        }
        if root.multiplicity >= 2 {
            if u <= 1.0 + rtol && root.s != 0.0 {
                eta_ok = true;
            }
            if u >= 1.0 - rtol {
                xi_ok = true;
            }
        }
    }
    eta_ok && xi_ok
}

/// Classify constants of motion against the bifurcation diagram.
///
/// Planar inputs (`l_z = 0`) land in regions I–V or on the loci; spatial
/// inputs are regular, critical, or nonphysical. Boundary labels win within
/// a relative tolerance.
pub fn classify(params: &OscillatorParams, vals: &MotionValues) -> RegionLabel {
    let scale = (vals.e.abs() + vals.g.abs() + 1.0) * params.a * params.a;
    let btol = tol::COINCIDENT_ROOT * scale;
    if vals.lz == 0.0 {
        let loci = match critical_loci(params, vals.e) {
            Ok(l) => l,
            Err(_) => return RegionLabel::Nonphysical,
        };
        let g = vals.g;
        if (g - loci.l2).abs() < btol {
            // The z-axis orbit below the Hopf energy passes through the
            // coordinate singularity; it is a critical spatial fiber.
            if vals.e < params.hopf_energy() {
                return RegionLabel::SpatialCritical;
            }
            return RegionLabel::BoundaryL2;
        }
        if (g - loci.l1).abs() < btol {
            return RegionLabel::BoundaryL1;
        }
        if (g - loci.l3).abs() < btol {
            return RegionLabel::BoundaryL3;
        }
        if g > loci.l3 {
            return RegionLabel::II;
        }
        if g > loci.l2 {
            // Between L2 and L3: III above the Hopf energy, I below.
            return if vals.e > params.hopf_energy() {
                RegionLabel::III
            } else {
                RegionLabel::I
            };
        }
        if g > loci.l1 {
            return RegionLabel::IV;
        }
        return RegionLabel::V;
    }
    // Spatial case.
    if vals.lz.abs() > vals.e / params.omega + btol {
        return RegionLabel::Nonphysical;
    }
    if !admissible(params, vals) {
        return RegionLabel::Nonphysical;
    }
    let poly = separation_polynomial(params, vals);
    let roots = polynomial_roots(&poly);
    let has_double = roots.s_roots.iter().any(|r| r.multiplicity >= 2);
    let corner = (vals.lz.abs() - vals.e / params.omega).abs() < btol;
    if has_double || corner {
        RegionLabel::SpatialCritical
    } else {
        RegionLabel::SpatialRegular
    }
}

/// Which coordinate surfaces envelope the motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CausticKind {
    /// One hyperboloid sheet pair and one outer ellipsoid (planar region IV
    /// and generic spatial motion).
    HyperboloidEllipsoid,
    /// Two confocal ellipsoids (planar region III).
    TwoEllipsoids,
    /// A critical value; the caustic degenerates.
    Degenerate,
}

/// Turning surfaces of the motion in prolate spheroidal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausticData {
    /// Turning values of `ξ` in `(1, ∞)`, ascending; ellipsoid caustics.
    /// The focal segment `ξ = 1` is not a caustic and is omitted.
    pub xi_turning: Vec<f64>,
    /// Nonnegative turning values of `η`; `1.0` marks motion reaching the
    /// poles (degenerate hyperboloid).
    pub eta_turning: Vec<f64>,
    pub kind: CausticKind,
}

/// Compute caustic data for admissible constants of motion.
pub fn caustic(params: &OscillatorParams, vals: &MotionValues) -> Result<CausticData> {
    let label = classify(params, vals);
    if label == RegionLabel::Nonphysical
        || label == RegionLabel::I
        || label == RegionLabel::II
        || label == RegionLabel::V
    {
        return Err(Error::Domain(format!(
            "no physical motion at (E, l_z, g) = ({}, {}, {})",
            vals.e, vals.lz, vals.g
        )));
    }
    let poly = separation_polynomial(params, vals);
    let roots = polynomial_roots(&poly);
    let scale = 1.0 + roots.real_u().iter().fold(0.0_f64, |m, u| m.max(u.abs()));
    let rtol = tol::COINCIDENT_ROOT * scale;
    let positive: Vec<&SignedRoot> = roots.s_roots.iter().filter(|r| r.s > rtol).collect();

    // η side: motion fills [−η₀, η₀] where η₀ is the smallest positive root
    // (the pole η = 1 when the range is full); P(0) = 0 pins the motion to
    // the equatorial plane.
    let c0 = poly.coeffs[0];
    let mut eta = Vec::new();
    if c0.abs() <= rtol * poly.coeff_scale() {
        eta.push(0.0);
    } else if c0 > 0.0 {
        if let Some(first) = positive.first() {
            eta.push(first.s.min(1.0));
        }
    }

    // ξ side: ellipsoid caustics are the turning values strictly above the
    // focal segment ξ = 1; a double root is one degenerate ellipsoid.
    let beyond: Vec<&&SignedRoot> = positive.iter().filter(|r| r.s > 1.0 + rtol).collect();
    let mut xi = Vec::new();
    match beyond.as_slice() {
        [] => {}
        [only] => xi.push(only.s),
        many => {
            xi.push(many.first().unwrap().s);
            xi.push(many.last().unwrap().s);
        }
    }
    let critical = matches!(
        label,
        RegionLabel::BoundaryL1
            | RegionLabel::BoundaryL2
            | RegionLabel::BoundaryL3
            | RegionLabel::SpatialCritical
    );
    let kind = if critical {
        CausticKind::Degenerate
    } else if eta.iter().any(|&s| s < 1.0 - rtol) {
        CausticKind::HyperboloidEllipsoid
    } else {
        CausticKind::TwoEllipsoids
    };
    Ok(CausticData { xi_turning: xi, eta_turning: eta, kind })
}

/// A constant-energy slice of the spatial bifurcation diagram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationSlice {
    pub e: f64,
    /// `(l_z, g)` along the lower branch `g = l_z² − 2a²E`.
    pub lower_branch: Vec<[f64; 2]>,
    /// `(l_z, g)` along the upper branch from the double-root
    /// parametrization, both signs of `l_z`.
    pub upper_branch: Vec<[f64; 2]>,
    /// The isolated critical value at the origin, present iff `E > ω²a²/2`.
    pub isolated_point: Option<[f64; 2]>,
    /// Whether the upper branch has a kink at `l_z = 0` (iff `E < ω²a²/2`).
    pub kink_present: bool,
}

/// Sample the bifurcation diagram at fixed energy.
///
/// Both branches meet at the circular-orbit corners `|l_z| = E/ω`.
pub fn energy_slice(
    params: &OscillatorParams,
    e: f64,
    resolution: usize,
) -> Result<BifurcationSlice> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} must be at least 2"
        )));
    }
    let loci = critical_loci(params, e)?;
    let lz_max = e / params.omega;
    let mut lower = Vec::with_capacity(2 * resolution + 1);
    for i in 0..=2 * resolution {
        let lz = -lz_max + (i as f64 / resolution as f64) * lz_max;
        lower.push([lz, loci.lower_g(lz)]);
    }
    let d0 = loci.d_start();
    let d1 = loci.d_max()?;
    let mut upper_half = Vec::with_capacity(resolution + 1);
    for i in 0..=resolution {
        let d = d0 + (d1 - d0) * i as f64 / resolution as f64;
        // l_z²(d_start) = 0 by definition; round-off would otherwise leak a
        // spurious √ε into the branch start.
        let lz2 = if i == 0 { 0.0 } else { loci.upper_lz2(d).max(0.0) };
        upper_half.push([lz2.sqrt(), loci.upper_g(d)]);
    }
    let mut upper: Vec<[f64; 2]> = upper_half
        .iter()
        .rev()
        .map(|&[lz, g]| [-lz, g])
        .collect();
    upper.extend(upper_half.iter().skip(1));
    Ok(BifurcationSlice {
        e,
        lower_branch: lower,
        upper_branch: upper,
        isolated_point: loci.isolated_point,
        kink_present: loci.kink,
    })
}

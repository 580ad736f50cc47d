//! System parameters, phase-space points, the nine quadratic integrals and
//! their Casimirs, analytic gradients, Poisson brackets, and a verifying
//! orbit integrator.
//!
//! The conserved quantities of `H = |p|²/2 + ω²|r|²/2` used here are
//!
//! - `A = (A_x, A_y, A_z)` with `A_k = (p_k² + ω²k²)/2`, the separated
//!   one-dimensional energies;
//! - `L = r × p`, the angular momentum;
//! - `B` with `B_x = p_y p_z + ω² y z` (cyclically), closing the algebra;
//! - the Casimirs `H = A_x + A_y + A_z`, `C₂ = 2A·A + ω²L·L + B·B` and a
//!   cubic `C₃` built from `w_k = B_k + iωL_k`;
//! - the separation constant `G = L² − 2a²(A_x + A_y)` of prolate spheroidal
//!   coordinates with foci `(0, 0, ±a)`;
//! - the reduced invariants `R = (A_x + A_y)/ω`, `X = ω(L_x² + L_y²) − 2A_z R`
//!   and `Y` fixed by `{R, X} = −2Y`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical constants defining one oscillator instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Focal half-distance of the prolate spheroidal coordinates.
    pub a: f64,
    /// Angular frequency.
    pub omega: f64,
    /// Reduced Planck constant; only the quantum modules use it.
    pub hbar: f64,
}

impl OscillatorParams {
    /// Validates `a > 0`, `omega > 0`, `hbar > 0`.
    pub fn new(a: f64, omega: f64, hbar: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("focal half-distance a = {a} must be positive")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("frequency omega = {omega} must be positive")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidInput(format!("hbar = {hbar} must be positive")));
        }
        Ok(Self { a, omega, hbar })
    }

    /// Energy of the `n`-th quantum shell, `ħω(n + 3/2)`.
    pub fn shell_energy(&self, n: u32) -> f64 {
        self.hbar * self.omega * (f64::from(n) + 1.5)
    }

    /// Energy of the Hamiltonian Hopf bifurcation, `ω²a²/2`; the isolated
    /// critical value at `(l_z, g) = (0, 0)` exists for energies above it.
    pub fn hopf_energy(&self) -> f64 {
        0.5 * self.omega * self.omega * self.a * self.a
    }
}

/// A point `(r, p)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: [f64; 3],
    pub p: [f64; 3],
}

impl PhasePoint {
    pub fn new(r: [f64; 3], p: [f64; 3]) -> Result<Self> {
        if r.iter().chain(p.iter()).all(|v| v.is_finite()) {
            Ok(Self { r, p })
        } else {
            Err(Error::InvalidInput("phase point has non-finite components".into()))
        }
    }
}

/// Values of the nine quadratic integrals at a phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NineIntegrals {
    /// `(A_x, A_y, A_z)`, each nonnegative.
    pub a: [f64; 3],
    /// `(B_x, B_y, B_z)`.
    pub b: [f64; 3],
    /// `(L_x, L_y, L_z)`.
    pub l: [f64; 3],
}

impl NineIntegrals {
    /// Total energy `H = A_x + A_y + A_z`.
    pub fn h(&self) -> f64 {
        self.a[0] + self.a[1] + self.a[2]
    }
}

/// The energy-momentum map value `(E, l_z, g)` of a phase point, or a target
/// triple for the separation and semiclassics modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionValues {
    pub e: f64,
    pub lz: f64,
    pub g: f64,
}

impl MotionValues {
    pub fn new(e: f64, lz: f64, g: f64) -> Self {
        Self { e, lz, g }
    }
}

/// Invariants of the doubly reduced (by the flows of `H` and `L_z`) system,
/// together with the Casimirs of the nine-integral algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedInvariants {
    /// `R = (A_x + A_y)/ω`; satisfies `|L_z| ≤ R ≤ H/ω`.
    pub r: f64,
    /// `X = ω(L_x² + L_y²) − 2 A_z R`.
    pub x: f64,
    /// `Y`, fixed by `{R, X} = −2Y`.
    pub y: f64,
    /// Quadratic Casimir `C₂ = 2A·A + ω²L·L + B·B`.
    pub c2: f64,
    /// Cubic Casimir `C₃`.
    pub c3: f64,
}

impl ReducedInvariants {
    /// Residual of the Casimir relation
    /// `C = 4ω²(H − ωR)²(R² − L_z²) − ω²(X² + Y²)`, identically zero on
    /// phase-space points.
    pub fn casimir_residual(&self, h: f64, lz: f64, omega: f64) -> f64 {
        let hr = h - omega * self.r;
        4.0 * omega * omega * hr * hr * (self.r * self.r - lz * lz)
            - omega * omega * (self.x * self.x + self.y * self.y)
    }
}

/// Identifier for any conserved quantity with an analytic gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntegralId {
    Ax,
    Ay,
    Az,
    Lx,
    Ly,
    Lz,
    Bx,
    By,
    Bz,
    H,
    G,
    R,
    X,
    Y,
    C2,
    C3,
}

impl IntegralId {
    /// All identifiers, the nine algebra generators first.
    pub const ALL: [IntegralId; 16] = [
        IntegralId::Ax,
        IntegralId::Ay,
        IntegralId::Az,
        IntegralId::Lx,
        IntegralId::Ly,
        IntegralId::Lz,
        IntegralId::Bx,
        IntegralId::By,
        IntegralId::Bz,
        IntegralId::H,
        IntegralId::G,
        IntegralId::R,
        IntegralId::X,
        IntegralId::Y,
        IntegralId::C2,
        IntegralId::C3,
    ];

    /// The nine generators `A`, `L`, `B` of the quadratic algebra.
    pub const GENERATORS: [IntegralId; 9] = [
        IntegralId::Ax,
        IntegralId::Ay,
        IntegralId::Az,
        IntegralId::Lx,
        IntegralId::Ly,
        IntegralId::Lz,
        IntegralId::Bx,
        IntegralId::By,
        IntegralId::Bz,
    ];
}

impl std::str::FromStr for IntegralId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s.to_ascii_lowercase().as_str() {
            "ax" => IntegralId::Ax,
            "ay" => IntegralId::Ay,
            "az" => IntegralId::Az,
            "lx" => IntegralId::Lx,
            "ly" => IntegralId::Ly,
            "lz" => IntegralId::Lz,
            "bx" => IntegralId::Bx,
            "by" => IntegralId::By,
            "bz" => IntegralId::Bz,
            "h" => IntegralId::H,
            "g" => IntegralId::G,
            "r" => IntegralId::R,
            "x" => IntegralId::X,
            "y" => IntegralId::Y,
            "c2" => IntegralId::C2,
            "c3" => IntegralId::C3,
            other => return Err(Error::InvalidInput(format!("unknown integral id `{other}`"))),
        };
        Ok(id)
    }
}

/// Gradient of a phase-space function, split into `∂/∂r` and `∂/∂p`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseGradient {
    pub dr: [f64; 3],
    pub dp: [f64; 3],
}

impl PhaseGradient {
    fn axpy(&mut self, c: f64, other: &PhaseGradient) {
        for i in 0..3 {
            self.dr[i] += c * other.dr[i];
            self.dp[i] += c * other.dp[i];
        }
    }
}

fn a_component(pt: &PhasePoint, params: &OscillatorParams, k: usize) -> f64 {
    let w2 = params.omega * params.omega;
    0.5 * (pt.p[k] * pt.p[k] + w2 * pt.r[k] * pt.r[k])
}

fn l_component(pt: &PhasePoint, k: usize) -> f64 {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    pt.r[i] * pt.p[j] - pt.r[j] * pt.p[i]
}

// B_x = p_y p_z + ω² y z and cyclic images.
fn b_component(pt: &PhasePoint, params: &OscillatorParams, k: usize) -> f64 {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    pt.p[i] * pt.p[j] + params.omega * params.omega * pt.r[i] * pt.r[j]
}

fn grad_a(pt: &PhasePoint, params: &OscillatorParams, k: usize) -> PhaseGradient {
    let mut g = PhaseGradient::default();
    g.dr[k] = params.omega * params.omega * pt.r[k];
    g.dp[k] = pt.p[k];
    g
}

fn grad_l(pt: &PhasePoint, k: usize) -> PhaseGradient {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let mut g = PhaseGradient::default();
    g.dr[i] = pt.p[j];
    g.dr[j] = -pt.p[i];
    g.dp[i] = -pt.r[j];
    g.dp[j] = pt.r[i];
    g
}

fn grad_b(pt: &PhasePoint, params: &OscillatorParams, k: usize) -> PhaseGradient {
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let w2 = params.omega * params.omega;
    let mut g = PhaseGradient::default();
    g.dr[i] = w2 * pt.r[j];
    g.dr[j] = w2 * pt.r[i];
    g.dp[i] = pt.p[j];
    g.dp[j] = pt.p[i];
    g
}

/// `Y` in Cartesian variables.
///
/// With `α = ω²(x² + y²) − p_x² − p_y²`, `β = 2ω(x p_x + y p_y)`,
/// `γ = p_z² − ω²z²`, `δ = 2ω z p_z`, one has `X = (αγ − βδ)/(2ω)` and
/// `Y = (αδ + βγ)/(2ω)`; both follow from `X − iY = ω z₁ z₂ z̄₃²` in the
/// complex coordinates diagonalizing `H` and `L_z`.
fn xy_parts(pt: &PhasePoint, params: &OscillatorParams) -> (f64, f64, f64, f64) {
    let w = params.omega;
    let [x, y, z] = pt.r;
    let [px, py, pz] = pt.p;
    let alpha = w * w * (x * x + y * y) - px * px - py * py;
    let beta = 2.0 * w * (x * px + y * py);
    let gamma = pz * pz - w * w * z * z;
    let delta = 2.0 * w * z * pz;
    (alpha, beta, gamma, delta)
}

/// Evaluate one conserved quantity at a phase point.
pub fn value_of(id: IntegralId, pt: &PhasePoint, params: &OscillatorParams) -> f64 {
    let w = params.omega;
    match id {
        IntegralId::Ax => a_component(pt, params, 0),
        IntegralId::Ay => a_component(pt, params, 1),
        IntegralId::Az => a_component(pt, params, 2),
        IntegralId::Lx => l_component(pt, 0),
        IntegralId::Ly => l_component(pt, 1),
        IntegralId::Lz => l_component(pt, 2),
        IntegralId::Bx => b_component(pt, params, 0),
        IntegralId::By => b_component(pt, params, 1),
        IntegralId::Bz => b_component(pt, params, 2),
        IntegralId::H => {
            a_component(pt, params, 0) + a_component(pt, params, 1) + a_component(pt, params, 2)
        }
        IntegralId::G => {
            let l2: f64 = (0..3).map(|k| l_component(pt, k).powi(2)).sum();
            l2 - 2.0
                * params.a
                * params.a
                * (a_component(pt, params, 0) + a_component(pt, params, 1))
        }
        IntegralId::R => (a_component(pt, params, 0) + a_component(pt, params, 1)) / w,
        IntegralId::X => {
            let (alpha, beta, gamma, delta) = xy_parts(pt, params);
            (alpha * gamma - beta * delta) / (2.0 * w)
        }
        IntegralId::Y => {
            let (alpha, beta, gamma, delta) = xy_parts(pt, params);
            (alpha * delta + beta * gamma) / (2.0 * w)
        }
        IntegralId::C2 => {
            let mut c2 = 0.0;
            for k in 0..3 {
                let (a, l, b) = (
                    a_component(pt, params, k),
                    l_component(pt, k),
                    b_component(pt, params, k),
                );
                c2 += 2.0 * a * a + w * w * l * l + b * b;
            }
            c2
        }
        IntegralId::C3 => c3_value(pt, params),
    }
}

/// The cubic Casimir, assembled from real arithmetic.
///
/// With `w_k = B_k + iωL_k`,
/// `C₃ = 6 Re(w_x w_y w_z) + Σ_k [ 2|w_k|²(H − 3A_k) − (8/27)(H − 3A_k)³ ]`.
fn c3_value(pt: &PhasePoint, params: &OscillatorParams) -> f64 {
    let w = params.omega;
    let a: Vec<f64> = (0..3).map(|k| a_component(pt, params, k)).collect();
    let l: Vec<f64> = (0..3).map(|k| l_component(pt, k)).collect();
    let b: Vec<f64> = (0..3).map(|k| b_component(pt, params, k)).collect();
    let h = a[0] + a[1] + a[2];
    // Re(wx wy wz) = BxByBz − ω²(Bx Ly Lz + Lx By Lz + Lx Ly Bz)
    let re_triple = b[0] * b[1] * b[2]
        - w * w * (b[0] * l[1] * l[2] + l[0] * b[1] * l[2] + l[0] * l[1] * b[2]);
    let mut c3 = 6.0 * re_triple;
    for k in 0..3 {
        let wk2 = b[k] * b[k] + w * w * l[k] * l[k];
        let hk = h - 3.0 * a[k];
        c3 += 2.0 * wk2 * hk - (8.0 / 27.0) * hk * hk * hk;
    }
    c3
}

/// Analytic gradient of one conserved quantity.
pub fn gradient_of(id: IntegralId, pt: &PhasePoint, params: &OscillatorParams) -> PhaseGradient {
    let w = params.omega;
    match id {
        IntegralId::Ax => grad_a(pt, params, 0),
        IntegralId::Ay => grad_a(pt, params, 1),
        IntegralId::Az => grad_a(pt, params, 2),
        IntegralId::Lx => grad_l(pt, 0),
        IntegralId::Ly => grad_l(pt, 1),
        IntegralId::Lz => grad_l(pt, 2),
        IntegralId::Bx => grad_b(pt, params, 0),
        IntegralId::By => grad_b(pt, params, 1),
        IntegralId::Bz => grad_b(pt, params, 2),
        IntegralId::H => {
            let mut g = PhaseGradient::default();
            for k in 0..3 {
                g.dr[k] = w * w * pt.r[k];
                g.dp[k] = pt.p[k];
            }
            g
        }
        IntegralId::G => {
            let mut g = PhaseGradient::default();
            for k in 0..3 {
                g.axpy(2.0 * l_component(pt, k), &grad_l(pt, k));
            }
            let a2 = params.a * params.a;
            g.axpy(-2.0 * a2, &grad_a(pt, params, 0));
            g.axpy(-2.0 * a2, &grad_a(pt, params, 1));
            g
        }
        IntegralId::R => {
            let mut g = PhaseGradient::default();
            g.axpy(1.0 / w, &grad_a(pt, params, 0));
            g.axpy(1.0 / w, &grad_a(pt, params, 1));
            g
        }
        IntegralId::X => {
            // X = ω(Lx² + Ly²) − 2 Az R
            let mut g = PhaseGradient::default();
            g.axpy(2.0 * w * l_component(pt, 0), &grad_l(pt, 0));
            g.axpy(2.0 * w * l_component(pt, 1), &grad_l(pt, 1));
            let az = a_component(pt, params, 2);
            let r = value_of(IntegralId::R, pt, params);
            g.axpy(-2.0 * r, &grad_a(pt, params, 2));
            let gr = gradient_of(IntegralId::R, pt, params);
            g.axpy(-2.0 * az, &gr);
            g
        }
        IntegralId::Y => {
            let (alpha, beta, gamma, delta) = xy_parts(pt, params);
            let [x, y, z] = pt.r;
            let [px, py, pz] = pt.p;
            let mut g = PhaseGradient::default();
            let w2 = w * w;
            // d(alpha), d(beta) live in the (x, y) block; d(gamma), d(delta) in z.
            let dalpha = PhaseGradient {
                dr: [2.0 * w2 * x, 2.0 * w2 * y, 0.0],
                dp: [-2.0 * px, -2.0 * py, 0.0],
            };
            let dbeta = PhaseGradient {
                dr: [2.0 * w * px, 2.0 * w * py, 0.0],
                dp: [2.0 * w * x, 2.0 * w * y, 0.0],
            };
            let dgamma = PhaseGradient {
                dr: [0.0, 0.0, -2.0 * w2 * z],
                dp: [0.0, 0.0, 2.0 * pz],
            };
            let ddelta = PhaseGradient {
                dr: [0.0, 0.0, 2.0 * w * pz],
                dp: [0.0, 0.0, 2.0 * w * z],
            };
            g.axpy(delta, &dalpha);
            g.axpy(alpha, &ddelta);
            g.axpy(gamma, &dbeta);
            g.axpy(beta, &dgamma);
            for k in 0..3 {
                g.dr[k] /= 2.0 * w;
                g.dp[k] /= 2.0 * w;
            }
            g
        }
        IntegralId::C2 => {
            let mut g = PhaseGradient::default();
            for k in 0..3 {
                g.axpy(4.0 * a_component(pt, params, k), &grad_a(pt, params, k));
                g.axpy(2.0 * w * w * l_component(pt, k), &grad_l(pt, k));
                g.axpy(2.0 * b_component(pt, params, k), &grad_b(pt, params, k));
            }
            g
        }
        IntegralId::C3 => {
            let a: Vec<f64> = (0..3).map(|k| a_component(pt, params, k)).collect();
            let l: Vec<f64> = (0..3).map(|k| l_component(pt, k)).collect();
            let b: Vec<f64> = (0..3).map(|k| b_component(pt, params, k)).collect();
            let ga: Vec<PhaseGradient> = (0..3).map(|k| grad_a(pt, params, k)).collect();
            let gl: Vec<PhaseGradient> = (0..3).map(|k| grad_l(pt, k)).collect();
            let gb: Vec<PhaseGradient> = (0..3).map(|k| grad_b(pt, params, k)).collect();
            let h = a[0] + a[1] + a[2];
            let gh = gradient_of(IntegralId::H, pt, params);
            let w2 = w * w;
            let mut g = PhaseGradient::default();
            // 6 Re(wx wy wz) term, product rule over each factor.
            g.axpy(6.0 * b[1] * b[2], &gb[0]);
            g.axpy(6.0 * b[0] * b[2], &gb[1]);
            g.axpy(6.0 * b[0] * b[1], &gb[2]);
            g.axpy(-6.0 * w2 * l[1] * l[2], &gb[0]);
            g.axpy(-6.0 * w2 * b[0] * l[2], &gl[1]);
            g.axpy(-6.0 * w2 * b[0] * l[1], &gl[2]);
            g.axpy(-6.0 * w2 * b[1] * l[2], &gl[0]);
            g.axpy(-6.0 * w2 * l[0] * l[2], &gb[1]);
            g.axpy(-6.0 * w2 * b[1] * l[0], &gl[2]);
            g.axpy(-6.0 * w2 * b[2] * l[1], &gl[0]);
            g.axpy(-6.0 * w2 * b[2] * l[0], &gl[1]);
            g.axpy(-6.0 * w2 * l[0] * l[1], &gb[2]);
            for k in 0..3 {
                let wk2 = b[k] * b[k] + w2 * l[k] * l[k];
                let hk = h - 3.0 * a[k];
                // d(2 |w_k|² h_k)
                g.axpy(4.0 * hk * b[k], &gb[k]);
                g.axpy(4.0 * hk * w2 * l[k], &gl[k]);
                g.axpy(2.0 * wk2, &gh);
                g.axpy(-6.0 * wk2, &ga[k]);
                // d(−(8/27) h_k³)
                let c = -(8.0 / 9.0) * hk * hk;
                g.axpy(c, &gh);
                g.axpy(-3.0 * c, &ga[k]);
            }
            g
        }
    }
}

/// Canonical Poisson bracket `{f, g} = Σ_k (∂f/∂r_k ∂g/∂p_k − ∂f/∂p_k ∂g/∂r_k)`
/// evaluated with analytic gradients.
pub fn poisson_bracket(
    f: IntegralId,
    g: IntegralId,
    pt: &PhasePoint,
    params: &OscillatorParams,
) -> f64 {
    let gf = gradient_of(f, pt, params);
    let gg = gradient_of(g, pt, params);
    (0..3)
        .map(|k| gf.dr[k] * gg.dp[k] - gf.dp[k] * gg.dr[k])
        .sum()
}

/// Evaluate all conserved quantities at once.
pub fn eval_integrals(
    pt: &PhasePoint,
    params: &OscillatorParams,
) -> (NineIntegrals, MotionValues, ReducedInvariants) {
    let nine = NineIntegrals {
        a: [
            a_component(pt, params, 0),
            a_component(pt, params, 1),
            a_component(pt, params, 2),
        ],
        b: [
            b_component(pt, params, 0),
            b_component(pt, params, 1),
            b_component(pt, params, 2),
        ],
        l: [l_component(pt, 0), l_component(pt, 1), l_component(pt, 2)],
    };
    let vals = MotionValues {
        e: nine.h(),
        lz: nine.l[2],
        g: value_of(IntegralId::G, pt, params),
    };
    let red = ReducedInvariants {
        r: value_of(IntegralId::R, pt, params),
        x: value_of(IntegralId::X, pt, params),
        y: value_of(IntegralId::Y, pt, params),
        c2: value_of(IntegralId::C2, pt, params),
        c3: value_of(IntegralId::C3, pt, params),
    };
    (nine, vals, red)
}

/// One sample of an integrated orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: PhasePoint,
}

/// Maximum absolute deviation of each conserved quantity from its initial
/// value along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationDrift {
    pub h: f64,
    pub lz: f64,
    pub g: f64,
}

/// An integrated orbit with its conservation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub drift: ConservationDrift,
}

/// Integrate the flow of `H` with a fixed-step classical Runge–Kutta scheme
/// of order four, reporting the drift of `H`, `L_z`, `G`.
///
/// The flow is linear (`r' = p`, `p' = −ω²r`), so a fixed step is adequate;
/// drift scales as the fifth power of the step for this scheme.
pub fn integrate_orbit(
    start: &PhasePoint,
    params: &OscillatorParams,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("step dt = {dt} must be positive")));
    }
    if !(t_max >= dt && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "horizon t_max = {t_max} must be at least one step dt = {dt}"
        )));
    }
    let w2 = params.omega * params.omega;
    let deriv = |s: &[f64; 6]| -> [f64; 6] {
        [s[3], s[4], s[5], -w2 * s[0], -w2 * s[1], -w2 * s[2]]
    };
    let mut state = [
        start.r[0], start.r[1], start.r[2], start.p[0], start.p[1], start.p[2],
    ];
    // Uniform steps plus one remainder step so the trajectory ends exactly
    // at t_max.
    let n_full = (t_max / dt).floor() as usize;
    let remainder = t_max - n_full as f64 * dt;
    let has_tail = remainder > 1e-12 * dt;
    let n_steps = n_full + usize::from(has_tail);

    let (_, v0, _) = eval_integrals(start, params);
    let mut drift = ConservationDrift { h: 0.0, lz: 0.0, g: 0.0 };
    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(TrajectorySample { t: 0.0, point: *start });

    for step in 1..=n_steps {
        let dt = if step == n_steps && has_tail { remainder } else { dt };
        let k1 = deriv(&state);
        let mut s2 = state;
        for i in 0..6 {
            s2[i] += 0.5 * dt * k1[i];
        }
        let k2 = deriv(&s2);
        let mut s3 = state;
        for i in 0..6 {
            s3[i] += 0.5 * dt * k2[i];
        }
        let k3 = deriv(&s3);
        let mut s4 = state;
        for i in 0..6 {
            s4[i] += dt * k3[i];
        }
        let k4 = deriv(&s4);
        for i in 0..6 {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let point = PhasePoint {
            r: [state[0], state[1], state[2]],
            p: [state[3], state[4], state[5]],
        };
        let t = if step == n_steps { t_max } else { step as f64 * dt };
        let (_, v, _) = eval_integrals(&point, params);
        drift.h = drift.h.max((v.e - v0.e).abs());
        drift.lz = drift.lz.max((v.lz - v0.lz).abs());
        drift.g = drift.g.max((v.g - v0.g).abs());
        samples.push(TrajectorySample { t, point });
    }
    Ok(Trajectory { samples, drift })
}

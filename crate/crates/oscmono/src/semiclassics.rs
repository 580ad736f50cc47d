//! Action integrals by quadrature and the EBK (Bohr–Sommerfeld)
//! semiclassical joint spectrum.
//!
//! With the separated momenta `p_η² = P(η)/(1 − η²)²` and
//! `p_ξ² = P(ξ)/(ξ² − 1)²`, the actions are
//!
//! - `I_φ = l_z`,
//! - `I_η = (1/π) ∫ √P(η)/(1 − η²) dη` over the η turning interval,
//! - `I_ξ = (2/π) ∫ √P(ξ)/(ξ² − 1) dξ` over the ξ turning interval.
//!
//! The factor two in `I_ξ` makes the cycle commensurate with the others, in
//! the same way the radial action of a central oscillator enters the energy
//! twice per orbit; with it the three actions satisfy the exact identity
//! `E = ω (I_η + I_ξ + |I_φ|)`, which doubles as an accuracy check on the
//! quadrature. EBK quantization sets `I_φ = ħm`, `I_η = ħ(n_η + ½)`,
//! `I_ξ = ħ(n_ξ + ½)` with `n_η` constrained to the parity of `n − |m|` by
//! the reflection symmetry of the η degree of freedom.

use serde::Serialize;

use crate::model::{MotionValues, OscillatorParams};
use crate::reduction::g_range;
use crate::separation::{admissible, polynomial_roots, separation_polynomial};
use crate::{tol, Error, Result};

/// Options for EBK quantization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbkOptions {
    /// Replace `|m|` by `|m| + ½` in the effective `l_z²` term of `P`.
    pub langer: bool,
    /// Relative tolerance of the action quadratures.
    pub quad_tol: f64,
    /// Tolerance of the 1D solve locating `g`.
    pub root_tol: f64,
}

impl Default for EbkOptions {
    fn default() -> Self {
        Self { langer: false, quad_tol: tol::QUAD_DEFAULT, root_tol: tol::ROOT_DEFAULT }
    }
}

impl EbkOptions {
    fn validate(&self) -> Result<()> {
        if !(self.quad_tol > 0.0 && self.root_tol > 0.0) {
            return Err(Error::InvalidInput("EBK tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// The three action integrals with their turning intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionTriple {
    pub i_eta: f64,
    pub i_xi: f64,
    /// `I_φ = l_z` exactly.
    pub i_phi: f64,
    /// η turning interval `[−η₀, η₀]`.
    pub eta_interval: [f64; 2],
    /// ξ turning interval.
    pub xi_interval: [f64; 2],
    /// Absolute error estimate of the quadratures.
    pub quad_error: f64,
}

/// Adaptive Simpson integration of a smooth function on `[lo, hi]`.
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        err_acc: &mut f64,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || b - a < 1e-13 * (1.0 + b.abs() + a.abs()) {
            *err_acc += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        if depth > 48 {
            return Err(Error::Numerics(format!(
                "quadrature failed to converge on [{a}, {b}] (residual {delta:e})"
            )));
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, err_acc)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, err_acc)?;
        Ok(l + r)
    }
    let m = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(m), f(hi));
    let whole = simpson(lo, hi, fa, fm, fb);
    let mut err = 0.0;
    let v = recurse(f, lo, hi, fa, fm, fb, whole, tol, 0, &mut err)?;
    Ok((v, err))
}

/// `(1/π) ∫_{−η₀}^{η₀} √P/(1 − s²) ds` over the η turning interval
/// `[−√u₁, √u₁]`, in root-factored form.
///
/// With `s = η₀ sin θ` the endpoint factor is exact trigonometry,
/// `u₁ − s² = η₀² cos²θ`, so `√P = η₀|cos θ| √(−c₃(u₂ − u)(u₃ − u))` and the
/// integrand collapses to
/// `η₀²cos²θ/(η₀²cos²θ + 1 − η₀²) · √(−c₃(u₂ − u)(u₃ − u))` — smooth,
/// bounded, and free of the cancellation that plagues evaluating `P` near
/// its roots. When `η₀ = 1` (motion through the poles) the prefactor is
/// identically one.
fn eta_integral(c3: f64, u1: f64, u2: f64, u3: f64, quad_tol: f64) -> Result<(f64, f64)> {
    let u1 = u1.min(1.0);
    if u1 <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let e1 = (1.0 - u1).max(0.0);
    let f = |theta: f64| {
        let cos2 = theta.cos().powi(2);
        let u = u1 * theta.sin().powi(2);
        let weight = if e1 == 0.0 { 1.0 } else { u1 * cos2 / (u1 * cos2 + e1) };
        weight * (-c3 * (u2 - u) * (u3 - u)).max(0.0).sqrt()
    };
    let scale = (-c3 * u2 * u3).abs().sqrt().max(1.0);
    let (v, err) = adaptive_simpson(
        &f,
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        quad_tol * scale,
    )?;
    Ok((v / std::f64::consts::PI, err / std::f64::consts::PI))
}

/// `(1/π) ∫_{ξ₁}^{ξ₂} √P/(s² − 1) ds` over the ξ turning interval
/// `[√u₂, √u₃]`, in root-factored form.
///
/// With `s = mid + hw sin θ`, the endpoint factors are
/// `s − ξ₁ = hw(1 + sin θ)` and `ξ₂ − s = hw(1 − sin θ)`, both evaluated by
/// half-angle identities; `s² − 1 = (hw(1 + sin θ) + (ξ₁ − 1))(s + 1)`
/// absorbs the focal segment when `ξ₁ = 1`. Everything vanishing cancels
/// analytically, leaving a smooth bounded integrand.
fn xi_integral(c3: f64, u1: f64, u2: f64, u3: f64, quad_tol: f64) -> Result<(f64, f64)> {
    let xi1 = u2.max(1.0).sqrt();
    let xi2 = u3.max(1.0).sqrt();
    let hw = 0.5 * (xi2 - xi1);
    if hw < 1e-15 * xi2 {
        return Ok((0.0, 0.0));
    }
    let mid = 0.5 * (xi1 + xi2);
    let d1 = (xi1 - 1.0).max(0.0);
    let f = |theta: f64| {
        let phi = 0.5 * theta + std::f64::consts::FRAC_PI_4;
        let sin_phi = phi.sin();
        let cos_phi = phi.cos();
        let sp = 2.0 * sin_phi * sin_phi; // 1 + sin θ
        let sm = 2.0 * cos_phi * cos_phi; // 1 − sin θ
        let s = mid + hw * theta.sin();
        let u = s * s;
        let root = (-c3 * (u - u1).max(0.0) * (s + xi1) * (s + xi2)).max(0.0).sqrt();
        let weight = if d1 == 0.0 { 1.0 } else { hw * sp / (hw * sp + d1) };
        hw * weight * sm * root / (s + 1.0)
    };
    let scale = (-c3 * (u3 - u1).max(1.0)).abs().sqrt() * xi2;
    let (v, err) = adaptive_simpson(
        &f,
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        quad_tol * scale.max(1.0),
    )?;
    Ok((v / std::f64::consts::PI, err / std::f64::consts::PI))
}

/// Sorted real `u`-roots of the separation cubic at admissible values:
/// `η² ∈ [0, u₁]` and `ξ² ∈ [u₂, u₃]`.
fn sorted_u_roots(params: &OscillatorParams, vals: &MotionValues) -> Result<[f64; 3]> {
    if !admissible(params, vals) {
        return Err(Error::Domain(format!(
            "no motion at (E, l_z, g) = ({}, {}, {})",
            vals.e, vals.lz, vals.g
        )));
    }
    let poly = separation_polynomial(params, vals);
    let roots = polynomial_roots(&poly);
    let real_u = roots.real_u();
    if real_u.len() != 3 {
        return Err(Error::Domain(
            "complex turning configuration admits no librating motion".into(),
        ));
    }
    Ok([real_u[0].max(0.0), real_u[1], real_u[2]])
}

/// Compute the three action integrals at admissible constants of motion.
pub fn action_integrals(
    params: &OscillatorParams,
    vals: &MotionValues,
    quad_tol: f64,
) -> Result<ActionTriple> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
    }
    let [u1, u2, u3] = sorted_u_roots(params, vals)?;
    let c3 = separation_polynomial(params, vals).coeffs[3];
    let (i_eta, e_eta) = eta_integral(c3, u1, u2, u3, quad_tol)?;
    let (half_xi, e_xi) = xi_integral(c3, u1, u2, u3, quad_tol)?;
    let eta0 = u1.min(1.0).max(0.0).sqrt();
    Ok(ActionTriple {
        i_eta,
        i_xi: 2.0 * half_xi,
        i_phi: vals.lz,
        eta_interval: [-eta0, eta0],
        xi_interval: [u2.max(1.0).sqrt(), u3.max(1.0).sqrt()],
        quad_error: e_eta + 2.0 * e_xi,
    })
}

/// One EBK state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbkPoint {
    pub e: f64,
    pub g: f64,
    /// Residual of the `I_ξ` quantization condition at the solution; the
    /// action-sum identity keeps it at quadrature accuracy.
    pub i_xi_residual: f64,
}

/// Solve for the EBK point of quantum numbers `(m, n_η, n_ξ)`.
///
/// The energy is fixed by the action-sum identity at quantized actions:
/// `E = ω(ħ(n_η + ½) + ħ(n_ξ + ½) + |ħm|)`, which sits `ħω/2` below the
/// exact shell `ħω(n + 3/2)`; `g` is then located by a 1D solve of
/// `I_η(E, ħm, g) = ħ(n_η + ½)`, using that `I_η` increases with `g`.
pub fn ebk_point(
    params: &OscillatorParams,
    m: i64,
    n_eta: u32,
    n_xi: u32,
    options: &EbkOptions,
) -> Result<EbkPoint> {
    options.validate()?;
    let hb = params.hbar;
    let w = params.omega;
    let lz_eff = if options.langer {
        hb * (m.unsigned_abs() as f64 + 0.5)
    } else {
        hb * m as f64
    };
    let target_eta = hb * (f64::from(n_eta) + 0.5);
    let target_xi = hb * (f64::from(n_xi) + 0.5);
    let e = w * (target_eta + target_xi + lz_eff.abs());
    let range = g_range(params, e, lz_eff)?;
    let span = range.g_max - range.g_min;
    if span <= 0.0 {
        return Err(Error::Domain("degenerate g-range, no librating band".into()));
    }
    let eps = 1e-9 * span;
    let vals_at = |g: f64| MotionValues::new(e, lz_eff, g);
    let f = |g: f64| -> Result<f64> {
        Ok(action_integrals(params, &vals_at(g), options.quad_tol)?.i_eta - target_eta)
    };
    let mut glo = range.g_min + eps;
    let mut ghi = range.g_max - eps;
    let mut vlo = f(glo)?;
    let mut vhi = f(ghi)?;
    if vlo > 0.0 || vhi < 0.0 {
        return Err(Error::Domain(format!(
            "quantized I_eta = {target_eta} not bracketed in the admissible band"
        )));
    }
    // Bisection with secant acceleration; I_η is monotone in g.
    let mut g = 0.5 * (glo + ghi);
    for _ in 0..200 {
        let mut cand = if vhi != vlo { ghi - vhi * (ghi - glo) / (vhi - vlo) } else { g };
        if !(cand > glo && cand < ghi) {
            cand = 0.5 * (glo + ghi);
        }
        g = cand;
        let v = f(g)?;
        if v.abs() < options.root_tol * hb || (ghi - glo) < 1e-4 * options.root_tol * span.max(1.0)
        {
            break;
        }
        if v < 0.0 {
            glo = g;
            vlo = v;
        } else {
            ghi = g;
            vhi = v;
        }
    }
    let actions = action_integrals(params, &vals_at(g), options.quad_tol)?;
    Ok(EbkPoint { e, g, i_xi_residual: actions.i_xi - target_xi })
}

/// One state of an EBK shell spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbkState {
    pub m: i64,
    pub n_eta: u32,
    pub n_xi: u32,
    pub e: f64,
    pub g: f64,
}

/// The EBK joint spectrum of shell `n`: all `(m, n_η, n_ξ)` with
/// `|m| + n_η + n_ξ = n` and `n_η ≡ n − |m| (mod 2)`, sorted per column.
///
/// The parity constraint reflects the definite z-parity of the separated η
/// eigenfunctions; with it each column carries exactly as many states as
/// the quantum subspace of the same `(n, m)`.
pub fn ebk_spectrum(
    params: &OscillatorParams,
    n: u32,
    options: &EbkOptions,
) -> Result<Vec<EbkState>> {
    let mut states = Vec::new();
    for m in -(n as i64)..=n as i64 {
        let nm = n - m.unsigned_abs() as u32;
        let mut column = Vec::new();
        let mut n_eta = nm % 2;
        while n_eta <= nm {
            let n_xi = nm - n_eta;
            let point = ebk_point(params, m, n_eta, n_xi, options)?;
            column.push(EbkState { m, n_eta, n_xi, e: point.e, g: point.g });
            n_eta += 2;
        }
        column.sort_by(|a, b| a.g.partial_cmp(&b.g).unwrap());
        states.extend(column);
    }
    Ok(states)
}

/// One-sided derivative mismatch of the actions across `l_z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LzDerivativeJump {
    /// `∂I_η/∂l_z` at `0⁺` minus at `0⁻`.
    pub eta_jump: f64,
    /// `∂I_ξ/∂l_z` at `0⁺` minus at `0⁻`.
    pub xi_jump: f64,
    /// Quadrature error of the one-sided differences.
    pub quad_error: f64,
}

/// Measure the one-sided `∂I/∂l_z` mismatch at `l_z = 0` for fixed `(E, g)`
/// with finite differences of half-width `delta`.
///
/// Above the Hopf energy the actions are not smooth across `l_z = 0`: one of
/// the two picks up a kink of slope `∓1` (the sum identity forces the total),
/// so the jump is resolvable as soon as it exceeds the quadrature error.
pub fn action_lz_derivative_jump(
    params: &OscillatorParams,
    e: f64,
    g: f64,
    delta: f64,
    quad_tol: f64,
) -> Result<LzDerivativeJump> {
    if !(delta > 0.0) {
        return Err(Error::InvalidInput("finite-difference width must be positive".into()));
    }
    let plus = action_integrals(params, &MotionValues::new(e, delta, g), quad_tol)?;
    let minus = action_integrals(params, &MotionValues::new(e, -delta, g), quad_tol)?;
    let zero = action_integrals(params, &MotionValues::new(e, 0.0, g), quad_tol)?;
    let eta_plus = (plus.i_eta - zero.i_eta) / delta;
    let eta_minus = (zero.i_eta - minus.i_eta) / delta;
    let xi_plus = (plus.i_xi - zero.i_xi) / delta;
    let xi_minus = (zero.i_xi - minus.i_xi) / delta;
    let quad_error =
        (plus.quad_error + minus.quad_error + 2.0 * zero.quad_error) / delta;
    Ok(LzDerivativeJump {
        eta_jump: eta_plus - eta_minus,
        xi_jump: xi_plus - xi_minus,
        quad_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> OscillatorParams {
        OscillatorParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn frozen_action_values() {
        // a = ω = 1, E = 5, l_z = 1, g = 0
        let t = action_integrals(&unit_params(), &MotionValues::new(5.0, 1.0, 0.0), 1e-11)
            .unwrap();
        assert!((t.i_eta - 1.414_797_961_576_408_6).abs() < 1e-9, "I_eta = {}", t.i_eta);
        assert!((t.i_xi - 2.585_202_038_423_591).abs() < 1e-9, "I_xi = {}", t.i_xi);
        assert_eq!(t.i_phi, 1.0);
        assert!((t.i_eta + t.i_xi + t.i_phi.abs() - 5.0).abs() < 1e-9);
        // planar region III: E = 5, g = 1
        let t = action_integrals(&unit_params(), &MotionValues::new(5.0, 0.0, 1.0), 1e-11)
            .unwrap();
        assert!((t.i_eta - 2.288_597_961_136_152).abs() < 1e-8, "I_eta = {}", t.i_eta);
        assert!((t.i_xi - 2.711_402_038_864_923).abs() < 1e-8, "I_xi = {}", t.i_xi);
    }

    #[test]
    fn action_sum_identity_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..100 {
            let params =
                OscillatorParams::new(rng.gen_range(0.3..2.0), rng.gen_range(0.5..2.0), 1.0)
                    .unwrap();
            let e = rng.gen_range(0.5..10.0);
            let lz = rng.gen_range(-0.95..0.95) * e / params.omega;
            let range = g_range(&params, e, lz).unwrap();
            let g = range.g_min + rng.gen_range(0.05..0.95) * (range.g_max - range.g_min);
            let t = action_integrals(&params, &MotionValues::new(e, lz, g), 1e-11).unwrap();
            let resid = (e / params.omega - (t.i_eta + t.i_xi + lz.abs())).abs();
            assert!(
                resid < 1e-8 * e / params.omega,
                "residual {resid:e} at E={e}, lz={lz}, g={g}"
            );
        }
    }

    #[test]
    fn monotonicity_in_g() {
        let params = unit_params();
        let (e, lz) = (5.0, 1.0);
        let range = g_range(&params, e, lz).unwrap();
        let mut prev_eta = -1.0;
        let mut prev_xi = f64::INFINITY;
        for i in 1..20 {
            let g = range.g_min + (range.g_max - range.g_min) * i as f64 / 20.0;
            let t = action_integrals(&params, &MotionValues::new(e, lz, g), 1e-10).unwrap();
            assert!(t.i_eta > prev_eta, "I_eta not increasing at g = {g}");
            assert!(t.i_xi < prev_xi, "I_xi not decreasing at g = {g}");
            prev_eta = t.i_eta;
            prev_xi = t.i_xi;
        }
    }

    #[test]
    fn degenerate_circular_orbit_actions_vanish() {
        let params = unit_params();
        let e = 4.0;
        let lz = e / params.omega;
        // at the corner the band degenerates; approach it from inside
        let range = g_range(&params, e, lz * (1.0 - 1e-9)).unwrap();
        let g = 0.5 * (range.g_min + range.g_max);
        let t = action_integrals(&params, &MotionValues::new(e, lz * (1.0 - 1e-9), g), 1e-10)
            .unwrap();
        assert!(t.i_eta < 1e-4, "I_eta = {}", t.i_eta);
        assert!(t.i_xi < 1e-4, "I_xi = {}", t.i_xi);
    }

    #[test]
    fn quadrature_convergence_under_tolerance_halving() {
        let params = unit_params();
        let vals = MotionValues::new(5.0, 1.0, 0.0);
        let coarse = action_integrals(&params, &vals, 2e-8).unwrap();
        let fine = action_integrals(&params, &vals, 1e-8).unwrap();
        assert!((coarse.i_eta - fine.i_eta).abs() <= coarse.quad_error.max(1e-12));
        assert!((coarse.i_xi - fine.i_xi).abs() <= coarse.quad_error.max(1e-12));
    }

    #[test]
    fn inadmissible_values_are_domain_errors() {
        let params = unit_params();
        assert!(matches!(
            action_integrals(&params, &MotionValues::new(5.0, 0.0, 25.0), 1e-10),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ebk_ground_state() {
        let params = unit_params();
        let p = ebk_point(&params, 0, 0, 0, &EbkOptions::default()).unwrap();
        assert!((p.e - 1.0).abs() < 1e-12, "EBK ground energy {} (exact shell is 1.5)", p.e);
        assert!((p.g - -0.544_267_124_450_875_9).abs() < 1e-6, "g = {}", p.g);
        assert!(p.i_xi_residual.abs() < 1e-6);
        // with the Langer shift the ground energy lands on the exact shell
        let opts = EbkOptions { langer: true, ..EbkOptions::default() };
        let p = ebk_point(&params, 0, 0, 0, &opts).unwrap();
        assert!((p.e - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ebk_point_in_band_and_m_symmetric() {
        let params = OscillatorParams::new(1.5, 1.0, 1.0).unwrap();
        let opts = EbkOptions::default();
        for (m, ne, nx) in [(2, 1, 3), (-2, 1, 3), (0, 2, 2), (5, 0, 1)] {
            let p = ebk_point(&params, m, ne, nx, &opts).unwrap();
            let range = g_range(&params, p.e, params.hbar * m as f64).unwrap();
            assert!(p.g >= range.g_min - 1e-9 && p.g <= range.g_max + 1e-9);
        }
        let plus = ebk_point(&params, 3, 1, 2, &opts).unwrap();
        let minus = ebk_point(&params, -3, 1, 2, &opts).unwrap();
        assert!((plus.g - minus.g).abs() < 1e-9);
        assert_eq!(plus.e, minus.e);
    }

    #[test]
    fn ebk_shell_counts_match_subspace_dimensions() {
        let params = OscillatorParams::new(1.5, 1.0, 1.0).unwrap();
        for n in [2u32, 5] {
            let states = ebk_spectrum(&params, n, &EbkOptions::default()).unwrap();
            assert_eq!(states.len() as u64, crate::reduction::total_states(n));
            for m in -(n as i64)..=n as i64 {
                let count = states.iter().filter(|s| s.m == m).count() as u64;
                assert_eq!(count, crate::reduction::exact_state_count(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn lz_kink_detected_above_hopf() {
        let params = unit_params();
        // region III fiber at E = 5 > E_c: the η action carries the kink
        let j = action_lz_derivative_jump(&params, 5.0, 1.0, 1e-4, 1e-11).unwrap();
        assert!(
            j.eta_jump.abs() > 10.0 * j.quad_error.max(1e-10),
            "eta jump {} vs error {}",
            j.eta_jump,
            j.quad_error
        );
        assert!((j.eta_jump - -2.0).abs() < 1e-3, "slope mismatch should be −2, got {}", j.eta_jump);
        // region IV fiber: the ξ action carries it
        let j = action_lz_derivative_jump(&params, 5.0, -1.0, 1e-4, 1e-11).unwrap();
        assert!((j.xi_jump - -2.0).abs() < 1e-3, "xi jump {}", j.xi_jump);
        assert!(j.eta_jump.abs() < 1e-3);
    }
}

//! Asymptotic quantities: the crossing coefficients `ω`, `ν`, `ω_odd`,
//! leading transfer matrices, and predicted resonance widths.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::actions::{action_s, da_de, ActionError};
use crate::linalg::{mat2_conj, mat2_identity, mat2_inverse, Mat2};
use crate::problem::{CrossingData, ValidatedProblem};
use crate::special::{factorial, gamma};
use crate::stationary_phase::{mu, MuInterpretation};

/// Formula for `ν`, the first-order correction that enters `ω_odd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NuFormula {
    /// `(V1'+V2')(0)/(4E0) (k+1)(m-k)/(m+2) - (k+1)(k+2) v_{m+1} / ((m+1)(m+2) v_m)`,
    /// from expanding WKB amplitudes and the phase difference at the crossing.
    #[default]
    Derived,
    /// `(V1'+V2')(0)/4 (k+1 - 2(2k+1)σ/(m+2)) - (2k+1) v_{m+1} / ((m+1)(m+2)|v_m|)`.
    Verbatim,
}

/// Prefactor of the width formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthPrefactor {
    /// `D = 2|ω|² cos² / A'(E0)`, invariant under rescaling the resonant state.
    #[default]
    ScaleInvariant,
    /// `D = 2√2 |ω|² cos² / √A'(E0)`.
    Verbatim,
}

/// Bracket replacing `ν r^{(k)}(0) + r^{(k+1)}(0)` when `r1` is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstOrderBracket {
    /// `ν ∂^k Ū + ∂^{k+1} Ū + i(k+1) V1'(0) r1^{(k)}(0) / (2√E0)`: the
    /// `(k+1)`-th derivative of `r0 - i r1 φ1'` with `φ1' = √(E0 - V1)`.
    #[default]
    Derived,
    /// `ν ∂^k Ū - i(∂^{k+1} Ū + (k+1) r1^{(k)}(0) / (2√E0))`.
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AsymptoticOptions {
    pub mu: MuInterpretation,
    pub nu: NuFormula,
    pub prefactor: WidthPrefactor,
    pub bracket: FirstOrderBracket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    General,
    Odd,
}

impl Regime {
    pub fn of(c: &CrossingData) -> Self {
        if c.is_odd_regime() {
            Regime::Odd
        } else {
            Regime::General
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::General => "general",
            Regime::Odd => "odd",
        }
    }
}

/// `h`-exponent of the transfer-matrix correction.
pub fn transfer_power(c: &CrossingData, regime: Regime) -> f64 {
    let j = match regime {
        Regime::General => c.k + 1,
        Regime::Odd => c.k + 2,
    };
    j as f64 / (c.m + 1) as f64
}

/// `h`-exponent of the width: `1 + 2·transfer_power`.
pub fn width_power(c: &CrossingData, regime: Regime) -> f64 {
    1.0 + 2.0 * transfer_power(c, regime)
}

/// Error exponent `s = min(1/3, 1/(m+1))` of the width asymptotics.
pub fn error_order(c: &CrossingData) -> f64 {
    (1.0 / 3.0).min(1.0 / (c.m + 1) as f64)
}

fn sqrt_e0(c: &CrossingData) -> f64 {
    c.e0.sqrt()
}

/// Everything in `ω` except the interaction factor.
fn omega_factor(c: &CrossingData) -> Complex64 {
    let (k, m) = (c.k as f64, c.m as f64);
    let p = (k + 1.0) / (m + 1.0);
    let theta = c.sigma() * (k + 1.0) * PI / (2.0 * (m + 1.0));
    mu(c.k, c.m, theta) / ((m + 1.0) * factorial(c.k))
        * gamma(p)
        * c.e0.powf((k - m) / (2.0 * (m + 1.0)))
        * (2.0 * factorial(c.m + 1) / c.v_m.abs()).powf(p)
}

fn omega_odd_factor(c: &CrossingData, interp: MuInterpretation) -> Complex64 {
    let (k, m) = (c.k as f64, c.m as f64);
    let p = (k + 2.0) / (m + 1.0);
    let theta = c.sigma() * (k + 2.0) * PI / (2.0 * (m + 1.0));
    interp.factor(c.k, c.m, theta) / ((m + 1.0) * factorial(c.k + 1))
        * gamma(p)
        * c.e0.powf((k + 1.0 - m) / (2.0 * (m + 1.0)))
        * (2.0 * factorial(c.m + 1) / c.v_m.abs()).powf(p)
}

/// `ω` for a multiplicative interaction `r0`.
pub fn omega(c: &CrossingData) -> Complex64 {
    omega_factor(c) * c.r_k
}

pub fn nu(c: &CrossingData, formula: NuFormula) -> f64 {
    let (k, m) = (c.k as f64, c.m as f64);
    let sum = c.dv1_0 + c.dv2_0;
    match formula {
        NuFormula::Derived => {
            sum / (4.0 * c.e0) * (k + 1.0) * (m - k) / (m + 2.0)
                - (k + 1.0) * (k + 2.0) * c.v_m1 / ((m + 1.0) * (m + 2.0) * c.v_m)
        }
        NuFormula::Verbatim => {
            sum / 4.0 * (k + 1.0 - 2.0 * (2.0 * k + 1.0) * c.sigma() / (m + 2.0))
                - (2.0 * k + 1.0) * c.v_m1 / ((m + 1.0) * (m + 2.0) * c.v_m.abs())
        }
    }
}

/// `ω_odd` for a multiplicative interaction `r0`.
pub fn omega_odd(c: &CrossingData, interp: MuInterpretation, formula: NuFormula) -> Complex64 {
    omega_odd_factor(c, interp) * (nu(c, formula) * c.r_k + c.r_k1)
}

/// `∂_x^j Ū` at `(0, √E0)` with `Ū(x, ξ) = r0(x) - i r1(x) ξ`, for `j = k, k+1`.
pub fn u_bar_derivatives(c: &CrossingData) -> (Complex64, Complex64) {
    let s = sqrt_e0(c);
    (
        Complex64::new(c.r_k, -c.r1_k * s),
        Complex64::new(c.r_k1, -c.r1_k1 * s),
    )
}

/// `ω` for `U = r0 + i h r1 D_x`.
pub fn omega_full_coupling(c: &CrossingData) -> Complex64 {
    omega_factor(c) * u_bar_derivatives(c).0
}

/// `ω_odd` for `U = r0 + i h r1 D_x`.
pub fn omega_odd_full_coupling(c: &CrossingData, opts: &AsymptoticOptions) -> Complex64 {
    let (uk, uk1) = u_bar_derivatives(c);
    let n = nu(c, opts.nu);
    let k1 = (c.k + 1) as f64;
    let i = Complex64::i();
    let bracket = match opts.bracket {
        FirstOrderBracket::Derived => {
            uk * n + uk1 + i * (k1 * c.dv1_0 * c.r1_k / (2.0 * sqrt_e0(c)))
        }
        FirstOrderBracket::Verbatim => uk * n - i * (uk1 + k1 * c.r1_k / (2.0 * sqrt_e0(c))),
    };
    omega_odd_factor(c, opts.mu) * bracket
}

/// Coefficient used at leading order in the given regime.
pub fn regime_omega(c: &CrossingData, regime: Regime, opts: &AsymptoticOptions) -> Complex64 {
    match regime {
        Regime::General => omega_full_coupling(c),
        Regime::Odd => omega_odd_full_coupling(c, opts),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferAsymptotic {
    pub power: f64,
    pub omega: Complex64,
    pub t_plus: Mat2,
    pub t_minus: Mat2,
    pub regime: Regime,
}

/// `T+ = I - i h^p [[0, conj ω], [ω, 0]]` and `T- = (conj T+)^{-1}`.
pub fn transfer_from(omega: Complex64, power: f64, regime: Regime, h: f64) -> TransferAsymptotic {
    let eps = h.powf(power);
    let i = Complex64::i();
    let mut t_plus = mat2_identity();
    t_plus[0][1] = -i * eps * omega.conj();
    t_plus[1][0] = -i * eps * omega;
    let t_minus = mat2_inverse(&mat2_conj(&t_plus));
    TransferAsymptotic {
        power,
        omega,
        t_plus,
        t_minus,
        regime,
    }
}

pub fn transfer_matrices(c: &CrossingData, h: f64, opts: &AsymptoticOptions) -> TransferAsymptotic {
    let regime = Regime::of(c);
    let w = if c.coupled {
        regime_omega(c, regime, opts)
    } else {
        Complex64::zero()
    };
    transfer_from(w, transfer_power(c, regime), regime, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionNote {
    /// The leading coefficient vanishes: no width can be predicted at this order.
    NoLeadingOrder,
    /// The cos factor vanishes: subleading regime, double line of resonances.
    DoubleLine,
}

impl PredictionNote {
    pub fn describe(self) -> &'static str {
        match self {
            PredictionNote::NoLeadingOrder => "no leading-order prediction",
            PredictionNote::DoubleLine => "subleading regime / double line of resonances",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePrediction {
    pub e_bs: f64,
    pub h: f64,
    pub regime: Regime,
    pub power_total: f64,
    pub d: f64,
    pub cos_factor: f64,
    pub im_z: f64,
    pub s: f64,
    pub arg_omega: f64,
    pub omega: Complex64,
    pub da_de_e0: f64,
    pub error_order: f64,
    pub note: Option<PredictionNote>,
}

/// `D` from `|ω|²`, the cos factor and `A'(E0)`.
pub fn width_prefactor(omega_sq: f64, cos_factor: f64, da_de_e0: f64, kind: WidthPrefactor) -> f64 {
    let c2 = cos_factor * cos_factor;
    match kind {
        WidthPrefactor::ScaleInvariant => 2.0 * omega_sq * c2 / da_de_e0,
        WidthPrefactor::Verbatim => 2.0 * 2f64.sqrt() * omega_sq * c2 / da_de_e0.sqrt(),
    }
}

/// Leading-order resonance width at a Bohr-Sommerfeld energy.
pub fn predict(
    p: &ValidatedProblem,
    e_bs: f64,
    h: f64,
    opts: &AsymptoticOptions,
) -> Result<ResonancePrediction, ActionError> {
    let c = &p.crossing;
    let regime = Regime::of(c);
    let omega = if c.coupled {
        regime_omega(c, regime, opts)
    } else {
        Complex64::zero()
    };
    let da = da_de(p, p.spec.e0)?;
    let s = action_s(p, e_bs)?;
    let power_total = width_power(c, regime);
    let base = ResonancePrediction {
        e_bs,
        h,
        regime,
        power_total,
        d: 0.0,
        cos_factor: 0.0,
        im_z: 0.0,
        s,
        arg_omega: f64::NAN,
        omega,
        da_de_e0: da,
        error_order: error_order(c),
        note: Some(PredictionNote::NoLeadingOrder),
    };
    let w2 = omega.norm_sqr();
    if w2 == 0.0 {
        return Ok(base);
    }
    let arg = omega.arg();
    let cos_factor = (arg - s / (2.0 * h)).cos();
    let d = width_prefactor(w2, cos_factor, da, opts.prefactor);
    let note = if cos_factor.abs() < 1e-8 {
        Some(PredictionNote::DoubleLine)
    } else {
        None
    };
    Ok(ResonancePrediction {
        d,
        cos_factor,
        im_z: -d * h.powf(power_total),
        arg_omega: arg,
        note,
        ..base
    })
}

/// Predictions for every Bohr-Sommerfeld energy at `h`.
pub fn predict_all(
    p: &ValidatedProblem,
    h: f64,
    opts: &AsymptoticOptions,
) -> Result<Vec<(u64, ResonancePrediction)>, ActionError> {
    crate::actions::bohr_sommerfeld(p, h)?
        .into_iter()
        .map(|(n, e)| predict(p, e, h, opts).map(|r| (n, r)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat2_max_abs_diff, mat2_mul};
    use crate::problem::{reference_r1, reference_r2, validate};
    use proptest::prelude::*;

    fn data(k: u32, m: u32, v_m: f64) -> CrossingData {
        CrossingData {
            m,
            v_m,
            v_m1: 0.0,
            k,
            r_k: 1.0,
            r_k1: 0.0,
            r1_k: 0.0,
            r1_k1: 0.0,
            dv1_0: 0.0,
            dv2_0: 0.0,
            e0: 1.0,
            coupled: true,
        }
    }

    #[test]
    fn omega_examples() {
        let c = data(0, 1, 4.0);
        let want = Complex64::from_polar(PI.sqrt() / 2.0, PI / 4.0);
        assert!((omega(&c) - want).norm() < 1e-15);
        let c2 = CrossingData { r_k: 2.0, ..c };
        assert!((omega(&c2) - want * 2.0).norm() < 1e-15);
        assert_eq!(omega(&data(1, 3, 24.0)), Complex64::zero());
    }

    #[test]
    fn nu_examples() {
        let c = CrossingData {
            dv1_0: -2.0,
            dv2_0: -2.0,
            ..data(1, 3, 24.0)
        };
        for f in [NuFormula::Derived, NuFormula::Verbatim] {
            assert!((nu(&c, f) + 0.8).abs() < 1e-15);
        }
        assert_eq!(nu(&data(1, 3, 24.0), NuFormula::Derived), 0.0);
        // flipping the sign of v_m only moves the middle term of the verbatim form
        let flipped = CrossingData { v_m: -24.0, ..c };
        assert!((nu(&flipped, NuFormula::Verbatim) - -(2.0 + 6.0 / 5.0)).abs() < 1e-15);
    }

    #[test]
    fn omega_odd_examples() {
        let c = CrossingData {
            dv1_0: -2.0,
            dv2_0: -2.0,
            ..data(1, 3, 24.0)
        };
        let g = gamma(0.75) * 2f64.powf(0.75) / 8.0;
        let want = Complex64::from_polar(g * -0.8, 3.0 * PI / 8.0);
        let got = omega_odd(&c, MuInterpretation::Shifted, NuFormula::Derived);
        assert!((got - want).norm() < 1e-15);
        let only_r1 = CrossingData {
            r_k: 0.0,
            r_k1: 1.0,
            ..c
        };
        let got = omega_odd(&only_r1, MuInterpretation::Shifted, NuFormula::Derived);
        assert!((got - Complex64::from_polar(g, 3.0 * PI / 8.0)).norm() < 1e-15);
        let cancel = CrossingData {
            r_k: 1.0,
            r_k1: 0.8,
            ..c
        };
        assert!(omega_odd(&cancel, MuInterpretation::Shifted, NuFormula::Derived).norm() < 1e-15);
        assert_eq!(
            omega_odd(&c, MuInterpretation::Verbatim, NuFormula::Derived),
            Complex64::zero()
        );
    }

    #[test]
    fn full_coupling_reduces_and_evaluates() {
        let c = CrossingData {
            dv1_0: -2.0,
            dv2_0: -2.0,
            r_k1: 0.3,
            ..data(1, 3, 24.0)
        };
        let opts = AsymptoticOptions::default();
        assert_eq!(omega_full_coupling(&c), omega(&c));
        let a = omega_odd_full_coupling(&c, &opts);
        let b = omega_odd(&c, opts.mu, opts.nu);
        assert!((a - b).norm() < 1e-15);

        let r1_only = CrossingData {
            r_k: 0.0,
            r1_k: 1.0,
            ..data(0, 1, 4.0)
        };
        let base = omega(&data(0, 1, 4.0));
        assert!((omega_full_coupling(&r1_only) - base * Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let mixed = CrossingData {
            r_k: 0.0,
            r_k1: 1.0,
            r1_k: 1.0,
            e0: 4.0,
            ..data(0, 1, 4.0)
        };
        assert_eq!(u_bar_derivatives(&mixed).0, Complex64::new(0.0, -2.0));
    }

    #[test]
    fn transfer_matrix_examples() {
        let mut c = data(0, 1, 4.0);
        c.coupled = false;
        let t = transfer_matrices(&c, 0.01, &AsymptoticOptions::default());
        assert_eq!(t.t_plus, mat2_identity());
        assert!(mat2_max_abs_diff(&t.t_minus, &mat2_identity()) == 0.0);

        let p = validate(&reference_r1()).unwrap();
        let t = transfer_matrices(&p.crossing, 0.01, &AsymptoticOptions::default());
        let want = 0.1 * (PI / 6.0).sqrt();
        assert!((t.t_plus[1][0].norm() - want).abs() < 1e-15);
        assert_eq!(t.power, 0.5);
    }

    fn arb_crossing() -> impl Strategy<Value = CrossingData> {
        (
            (0u32..4, 1u32..6),
            prop_oneof![-30.0..-0.5f64, 0.5..30.0f64],
            -5.0..5.0f64,
            (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
            (-3.0..3.0f64, -3.0..3.0f64),
            0.2..4.0f64,
        )
            .prop_map(
                |((k, m), v_m, v_m1, (r_k, r_k1, r1_k, r1_k1), (d1, d2), e0)| CrossingData {
                    m: m.max(k + 1),
                    v_m,
                    v_m1,
                    k,
                    r_k,
                    r_k1,
                    r1_k,
                    r1_k1,
                    dv1_0: d1,
                    dv2_0: d2,
                    e0,
                    coupled: true,
                },
            )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn t_minus_inverts_conjugate(c in arb_crossing(), h in 0.001f64..0.3) {
            let t = transfer_matrices(&c, h, &AsymptoticOptions::default());
            let prod = mat2_mul(&t.t_minus, &mat2_conj(&t.t_plus));
            prop_assert!(mat2_max_abs_diff(&prod, &mat2_identity()) < 1e-14);
            // the bracket [[0, conj ω], [ω, 0]] behind the correction
            let i = Complex64::i();
            let (upper, lower) = (t.t_plus[0][1] * i, t.t_plus[1][0] * i);
            prop_assert!((upper - lower.conj()).norm() <= 1e-15 * (1.0 + upper.norm()));
        }

        #[test]
        fn prefactor_is_nonnegative(w in 0.0f64..10.0, cf in -1.0f64..1.0, da in 0.1f64..10.0) {
            for kind in [WidthPrefactor::ScaleInvariant, WidthPrefactor::Verbatim] {
                prop_assert!(width_prefactor(w, cf, da, kind) >= 0.0);
            }
        }
    }

    #[test]
    fn r1_prediction_closed_form() {
        let p = validate(&reference_r1()).unwrap();
        let h = 2.0 / 41.0;
        let opts = AsymptoticOptions::default();
        let r = predict(&p, 1.0, h, &opts).unwrap();
        assert_eq!(r.power_total, 2.0);
        assert_eq!(r.regime, Regime::General);
        assert!((r.arg_omega - PI / 4.0).abs() < 1e-15);
        let cf = (PI / 4.0 - r.s / (2.0 * h)).cos();
        assert!((r.d - cf * cf / 3.0).abs() < 1e-12);
        assert!((r.im_z + r.d * h * h).abs() < 1e-18);
        assert!((r.error_order - 1.0 / 3.0).abs() < 1e-15);
        let verbatim = predict(
            &p,
            1.0,
            h,
            &AsymptoticOptions {
                prefactor: WidthPrefactor::Verbatim,
                ..opts
            },
        )
        .unwrap();
        assert!((verbatim.d - 2.0 * 2f64.sqrt() * (PI / 6.0) * cf * cf / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn prediction_ignores_sign_of_coupling() {
        let p = validate(&reference_r1()).unwrap();
        let q = validate(&reference_r1().with_coupling_scale(-1.0)).unwrap();
        let opts = AsymptoticOptions::default();
        for n in [20u32, 23, 30] {
            let h = 2.0 / (2 * n + 1) as f64;
            let a = predict(&p, 1.0, h, &opts).unwrap();
            let b = predict(&q, 1.0, h, &opts).unwrap();
            assert!((a.d - b.d).abs() < 1e-12);
        }
    }

    #[test]
    fn double_line_is_flagged() {
        let p = validate(&reference_r1()).unwrap();
        let opts = AsymptoticOptions::default();
        let h = 2.0 / 41.0;
        let s = action_s(&p, 1.0).unwrap();
        // nearest h with π/4 - S/2h = π/2 + jπ
        let j = ((PI / 4.0 - s / (2.0 * h) - PI / 2.0) / PI).round();
        let h_node = s / (2.0 * (PI / 4.0 - PI / 2.0 - j * PI));
        let r = predict(&p, 1.0, h_node, &opts).unwrap();
        assert!(r.cos_factor.abs() < 1e-8);
        assert_eq!(r.note, Some(PredictionNote::DoubleLine));
        assert!(r.im_z.abs() < 1e-18);
    }

    #[test]
    fn r2_odd_regime_exponent() {
        let p = validate(&reference_r2()).unwrap();
        let r = predict(&p, 1.0, 0.04, &AsymptoticOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::Odd);
        assert_eq!(r.power_total, 2.5);
        assert!((r.error_order - 0.25).abs() < 1e-15);
        let w = omega_odd(&p.crossing, MuInterpretation::Shifted, NuFormula::Derived);
        assert!((r.omega - w).norm() < 1e-14);
    }

    #[test]
    fn decoupled_has_no_prediction() {
        let mut s = reference_r1();
        s.r0 = crate::expr::Expr::zero();
        let p = validate(&s).unwrap();
        let r = predict(&p, 1.0, 2.0 / 41.0, &AsymptoticOptions::default()).unwrap();
        assert_eq!(r.note, Some(PredictionNote::NoLeadingOrder));
        assert_eq!(r.im_z, 0.0);
    }
}

//! Quadrature: Gauss-Legendre panels and adaptive Gauss-Kronrod (G10/K21),
//! plus the square-root turning-point substitution used by the action
//! integrals.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("adaptive quadrature did not converge: estimate {estimate}, error {error} after {intervals} intervals")]
pub struct QuadError {
    pub estimate: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let s = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + s * x);
        }
        acc * s
    }
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

// 21-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 10-point Gauss weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let s = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = s * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * s, ((kron - gauss) * s).abs())
}

/// Adaptive Gauss-Kronrod with global bisection of the worst interval.
/// Converges when the summed error estimate is below `max(abs_tol, rel_tol*|I|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadError> {
    const MAX_INTERVALS: usize = 2000;
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk21(&mut f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(QuadError {
                estimate: total,
                error: err,
                intervals: parts.len(),
            });
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| {
                if p.3 > acc.1 {
                    (i, p.3)
                } else {
                    acc
                }
            });
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine resolution; accept as is
            return Ok(total);
        }
        let (v1, e1) = gk21(&mut f, lo, mid);
        let (v2, e2) = gk21(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Shape of an integrand near a simple zero `gap(x0) = 0` of the gap function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPower {
    /// `sqrt(gap)`
    Sqrt,
    /// `1 / sqrt(gap)`
    InvSqrt,
}

impl GapPower {
    fn apply(self, g: f64) -> f64 {
        let g = g.max(0.0);
        match self {
            GapPower::Sqrt => g.sqrt(),
            GapPower::InvSqrt => 1.0 / g.sqrt(),
        }
    }
}

/// `∫ gap(x)^(±1/2) dx` over `[from, to]`, where `gap` has a simple zero at
/// the endpoint `to` and is positive inside. Uses `x = to - s·t²` with
/// `s = sign(to - from)`, which turns the endpoint singularity into a smooth
/// integrand in `t`. The other endpoint may be regular. The result is
/// oriented: it changes sign when `to < from`.
pub fn toward_turning_point<G: Fn(f64) -> f64>(
    gap: G,
    power: GapPower,
    from: f64,
    to: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    let len = (to - from).abs();
    let dir = (to - from).signum();
    let tmax = len.sqrt();
    let v = adaptive(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let x = to - dir * t * t;
            2.0 * t * power.apply(gap(x))
        },
        0.0,
        tmax,
        tol,
        1e-14,
    )?;
    Ok(dir * v)
}

/// `∫_a^b gap^(±1/2) dx` where `gap` vanishes (simply) at both `a` and `b`.
pub fn between_turning_points<G: Fn(f64) -> f64>(
    gap: G,
    power: GapPower,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    let mid = 0.5 * (a + b);
    let left = toward_turning_point(&gap, power, mid, a, 0.5 * tol)?;
    let right = toward_turning_point(&gap, power, mid, b, 0.5 * tol)?;
    Ok(right - left)
}

/// Pairwise sum, so that the reduction order is fixed by the input order.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + core::ops::Add<Output = T> + Default,
{
    match values.len() {
        0 => T::default(),
        1 => values[0],
        n if n <= 8 => values.iter().fold(T::default(), |a, &b| a + b),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

//! Bracketed root refinement.

/// Bisection to `width`, followed by up to `polish` Newton steps that are
/// only accepted while they stay inside the final bracket.
pub fn bisect_polish<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, width: f64, polish: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let (blo, bhi) = (lo - width, hi + width);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..polish {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - f(x) / d;
        if !(blo..=bhi).contains(&next) {
            break;
        }
        if next == x {
            break;
        }
        x = next;
    }
    x
}

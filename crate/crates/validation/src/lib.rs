//! Reference computations that share no code with the library under test.

use fpa_core::{BeamParams, PeEstimate, Rect};

fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let both = left + right;
    if depth == 0 || (both - whole).abs() <= 15.0 * rel * both.abs() {
        return both + (both - whole) / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, rel, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, rel, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative accuracy
/// `rel`, started from 16 panels so narrow peaks are not missed.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64) -> f64 {
    (0..16)
        .map(|k| {
            let lo = a + (b - a) * k as f64 / 16.0;
            let hi = a + (b - a) * (k + 1) as f64 / 16.0;
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            simpson_rec(
                f,
                lo,
                hi,
                flo,
                fmid,
                fhi,
                (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi),
                rel,
                40,
            )
        })
        .sum()
}

/// Photons the beam deposits on `rect`, by nested quadrature of the intensity.
pub fn rect_mass(beam: &BeamParams, rect: &Rect) -> f64 {
    let inner = |y: f64| integrate(&|x: f64| beam.intensity_at(x, y), rect.x_min, rect.x_max, 1e-12);
    integrate(&inner, rect.y_min, rect.y_max, 1e-11)
}

/// Standard error of the difference of two independent estimates.
pub fn combined_se(a: &PeEstimate, b: &PeEstimate) -> f64 {
    (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt()
}

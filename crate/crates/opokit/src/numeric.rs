//! Small deterministic 1-D search routines shared by the tuning-curve
//! and sweep code. All of them use fixed grids and fixed tolerances so
//! repeated runs produce identical bits.

/// Golden-section maximization of `f` on `[a, b]`.
///
/// Returns `(x_max, f(x_max))`. The interval is shrunk to the
/// comparison-noise floor, then the abscissa is sharpened by symmetric
/// parabolic steps with shrinking stencils — golden section alone
/// locates a smooth maximum only to about sqrt(machine eps) because
/// function values stop being distinguishable there.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let span = (b - a).abs();
    let (mut a, mut b) = (a, b);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let width_goal = tol.max(1e-8 * span);
    while (b - a).abs() > width_goal {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let (a0, b0) = (a.min(b), a.max(b));
    let mut xm = 0.5 * (a0 + b0);
    let mut fm = f(xm);
    for scale in [1e-3, 1e-5, 4e-6] {
        let h = scale * span;
        let (fl, fr) = (f(xm - h), f(xm + h));
        let curvature = fl - 2.0 * fm + fr;
        if curvature < 0.0 {
            let xv = xm + 0.5 * h * (fl - fr) / curvature;
            let fv = f(xv);
            if fv >= fm || (xv - xm).abs() <= h {
                xm = xv;
                fm = fv;
            }
        }
    }
    (xm, fm)
}

/// A local maximum of a sampled function, refined off the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub value: f64,
}

/// Scan `f` on `n` evenly spaced points over `[a, b]`, locate every
/// interior local maximum, and refine each one by golden section within
/// its bracketing grid cell. Peaks are returned sorted by value,
/// largest first.
pub fn scan_local_maxima<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, n: usize) -> Vec<Peak> {
    assert!(n >= 3, "scan grid too small");
    let h = (b - a) / (n - 1) as f64;
    let ys: Vec<f64> = (0..n).map(|i| f(a + i as f64 * h)).collect();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] {
            let lo = a + (i - 1) as f64 * h;
            let hi = a + (i + 1) as f64 * h;
            let (x, value) = golden_section_max(f, lo, hi, 1e-12 * (b - a).abs().max(1.0));
            peaks.push(Peak { x, value });
        }
    }
    peaks.sort_by(|p, q| q.value.total_cmp(&p.value));
    peaks
}

/// Bisection root finding for a monotone continuous `f` with
/// `f(a)` and `f(b)` of opposite sign. Returns the midpoint of the final
/// bracket once it is narrower than `tol`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    let fa = f(a);
    debug_assert!(fa * f(b) <= 0.0, "bisect_root: endpoints do not bracket");
    let mut sign_a = fa.signum();
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sign_a {
            a = m;
            sign_a = fm.signum();
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

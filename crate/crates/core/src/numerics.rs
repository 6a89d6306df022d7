//! Small numerical helpers shared by the modules.

use crate::C64;

/// Running trapezoidal integral of `y` over the nonuniform grid `x`,
/// starting at zero on `x[0]`.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len(), "grid and samples differ in length");
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    for i in 0..x.len() {
        if i > 0 {
            acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Complex version of [`cumulative_trapezoid`].
pub fn cumulative_trapezoid_c(x: &[f64], y: &[C64]) -> Vec<C64> {
    assert_eq!(x.len(), y.len(), "grid and samples differ in length");
    let mut out = Vec::with_capacity(x.len());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..x.len() {
        if i > 0 {
            acc += (y[i] + y[i - 1]) * (0.5 * (x[i] - x[i - 1]));
        }
        out.push(acc);
    }
    out
}

/// Pearson correlation coefficient. NaN when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.is_empty() {
        return f64::NAN;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Binomial coefficient as a float; exact for the small orders used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `steps` evenly spaced points covering `[start, end]` inclusive.
pub fn linspace(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (end - start) / (steps - 1) as f64;
            (0..steps)
                .map(|i| if i == steps - 1 { end } else { start + h * i as f64 })
                .collect()
        }
    }
}

pub fn is_strictly_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] > w[0])
}

/// Of `±candidate`, the one closer to `previous`.
pub fn nearest_sign(candidate: C64, previous: C64) -> C64 {
    if (candidate - previous).norm_sqr() <= (candidate + previous).norm_sqr() {
        candidate
    } else {
        -candidate
    }
}

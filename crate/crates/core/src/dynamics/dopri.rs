//! Dormand–Prince 5(4) with step-size control and the 4th-order continuous
//! extension, for small complex systems `y′ = f(t, y)`.

use crate::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveError {
    StepUnderflow { t: f64, h: f64 },
    TooManySteps { t: f64 },
}

type State<const N: usize> = [C64; N];

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// Integrates from `grid[0]` and returns the solution sampled at every grid
/// point through dense output.
pub fn solve<const N: usize, F>(
    mut f: F,
    grid: &[f64],
    y0: State<N>,
    tol: Tolerances,
) -> Result<Vec<State<N>>, SolveError>
where
    F: FnMut(f64, &State<N>) -> State<N>,
{
    let mut out = Vec::with_capacity(grid.len());
    if grid.is_empty() {
        return Ok(out);
    }
    out.push(y0);
    let t_end = *grid.last().unwrap();
    let mut t = grid[0];
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut next = 1;

    let norm = |v: &State<N>| (v.iter().map(|z| z.norm_sqr()).sum::<f64>() / N as f64).sqrt();
    let span = t_end - t;
    let mut h = {
        let (d0, d1) = (norm(&y), norm(&k1));
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(span.max(f64::MIN_POSITIVE))
    };
    let mut steps = 0usize;

    while next < grid.len() {
        if steps >= tol.max_steps {
            return Err(SolveError::TooManySteps { t });
        }
        steps += 1;
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            return Err(SolveError::StepUnderflow { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);

        let mut err = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = tol.atol + tol.rtol * y[i].norm().max(y1[i].norm());
            err += e.norm_sqr() / (sc * sc);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let t1 = t + h;
            let mut cont = [[C64::new(0.0, 0.0); N]; 4];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = k1[i] * h - ydiff;
                cont[0][i] = ydiff;
                cont[1][i] = bspl;
                cont[2][i] = ydiff - k7[i] * h - bspl;
                cont[3][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
            }
            while next < grid.len() && (grid[next] <= t1 || t1 >= t_end) {
                let theta = ((grid[next] - t) / h).clamp(0.0, 1.0);
                let th1 = 1.0 - theta;
                let mut v = [C64::new(0.0, 0.0); N];
                for i in 0..N {
                    v[i] = y[i] + (cont[0][i] + (cont[1][i] + (cont[2][i] + cont[3][i] * th1) * theta) * th1) * theta;
                }
                if grid[next] == t1 {
                    v = y1;
                }
                out.push(v);
                next += 1;
            }
            t = t1;
            y = y1;
            k1 = k7;
        }

        let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
        h *= if err <= 1.0 { fac } else { fac.min(1.0) };
    }
    Ok(out)
}

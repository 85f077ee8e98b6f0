//! Small numerical kernels: fixed-step RK4, adaptive Gauss–Kronrod quadrature,
//! bracketed root finding and uniform quadrature over the complex α-plane.

use crate::error::{Error, Result};

/// One classical fourth-order Runge–Kutta step for an autonomous system.
pub fn rk4_step<const N: usize, F>(f: &F, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let k2 = f(&axpy(y, 0.5 * h, &k1));
    let k3 = f(&axpy(y, 0.5 * h, &k2));
    let k4 = f(&axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `n` RK4 steps of size `h`, returning all `n + 1` points.
pub fn rk4_path<const N: usize, F>(f: &F, y0: &[f64; N], h: f64, n: usize) -> Vec<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(n + 1);
    out.push(*y0);
    let mut y = *y0;
    for _ in 0..n {
        y = rk4_step(f, &y, h);
        out.push(y);
    }
    out
}

/// Final point after integrating over `duration` with steps no larger than `h_max`.
pub fn rk4_flow<const N: usize, F>(f: &F, y0: &[f64; N], duration: f64, h_max: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let n = steps_for(duration, h_max);
    if n == 0 {
        return *y0;
    }
    let h = duration / n as f64;
    let mut y = *y0;
    for _ in 0..n {
        y = rk4_step(f, &y, h);
    }
    y
}

/// Number of equal steps of size at most `h_max` that cover `duration`.
pub fn steps_for(duration: f64, h_max: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        (duration / h_max - 1e-9).ceil().max(1.0) as usize
    }
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (G7/K15) quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut stack = vec![(lo, hi, tol)];
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((l, r, t)) = stack.pop() {
        let (val, err) = gk15(&f, l, r);
        evaluations += 1;
        if !val.is_finite() {
            return Err(Error::NoConvergence { iterations: evaluations, residual: f64::NAN });
        }
        if err <= t.max(1e-15 * val.abs()) || (r - l) < 1e-12 * (hi - lo) {
            total += val;
        } else if evaluations > 200_000 {
            return Err(Error::NoConvergence { iterations: evaluations, residual: err });
        } else {
            let m = 0.5 * (l + r);
            stack.push((l, m, 0.5 * t));
            stack.push((m, r, 0.5 * t));
        }
    }
    Ok(sign * total)
}

/// Brent's method on a bracketing interval `[a, b]`.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParams(format!("root not bracketed: f({a})={fa}, f({b})={fb}")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::NoConvergence { iterations: 200, residual: fb.abs() })
}

/// Uniform midpoint grid over the square `[-half_width, half_width]²` of the
/// complex plane, with the coherent-state measure `d²α / π` folded into the weight.
#[derive(Debug, Clone, Copy)]
pub struct AlphaGrid {
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self { half_width: 6.0, points_per_axis: 400 }
    }
}

impl AlphaGrid {
    /// Sum of `f(α) · d²α / π` over the grid.
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(num_complex::Complex64) -> T,
    {
        let n = self.points_per_axis;
        let h = 2.0 * self.half_width / n as f64;
        let weight = h * h / std::f64::consts::PI;
        let mut acc = T::default();
        for i in 0..n {
            let re = -self.half_width + (i as f64 + 0.5) * h;
            for j in 0..n {
                let im = -self.half_width + (j as f64 + 0.5) * h;
                acc = acc + f(num_complex::Complex64::new(re, im)) * weight;
            }
        }
        acc
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Empty("no samples"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok((mean, f64::NAN));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rk4_reproduces_exponential() {
        let f = |y: &[f64; 1]| [-y[0]];
        let y = rk4_flow(&f, &[1.0], 2.0, 1e-3);
        assert_abs_diff_eq!(y[0], (-2.0f64).exp(), epsilon = 1e-13);
    }

    #[test]
    fn gauss_kronrod_integrates_smooth_and_peaked_functions() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        assert_abs_diff_eq!(v, 2.0 * (1.0f64 / 1e-2).atan() / 1e-2, epsilon = 1e-7);
        let v = integrate(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, 2f64.cbrt(), epsilon = 1e-13);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn alpha_grid_normalizes_vacuum() {
        let total: f64 = AlphaGrid::default().integrate(|a| (-a.norm_sqr()).exp());
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }
}

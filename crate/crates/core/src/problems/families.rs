//! Objective functions of the test suite.
//!
//! Start points follow the classical definitions (Moré–Garbow–Hillstrom,
//! Andrei's unconstrained collection, CUTE).

use crate::linalg::SquareMatrix;

pub(crate) type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub(crate) type GradFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

pub(crate) struct Built {
    pub x0: Vec<f64>,
    pub f: ValueFn,
    pub g: GradFn,
    pub minimizer: Option<Vec<f64>>,
    pub fmin: Option<f64>,
    pub quadratic: bool,
}

fn built(x0: Vec<f64>, f: ValueFn, g: GradFn) -> Built {
    Built { x0, f, g, minimizer: None, fmin: None, quadratic: false }
}

impl Built {
    fn min_at(mut self, x: Vec<f64>, fmin: f64) -> Self {
        self.minimizer = Some(x);
        self.fmin = Some(fmin);
        self
    }

    fn quadratic(mut self) -> Self {
        self.quadratic = true;
        self
    }
}

/// `½ Σ i·x_i²`
pub(crate) fn quad_diag(n: usize) -> Built {
    built(
        vec![1.0; n],
        Box::new(|x| 0.5 * x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum::<f64>()),
        Box::new(|x, g| {
            for (i, (gi, v)) in g.iter_mut().zip(x).enumerate() {
                *gi = (i + 1) as f64 * v;
            }
        }),
    )
    .min_at(vec![0.0; n], 0.0)
    .quadratic()
}

pub fn hilbert(n: usize) -> SquareMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| 1.0 / (i + j + 1) as f64).collect()).collect();
    SquareMatrix::from_rows(&rows)
}

fn dense_quadratic(h: SquareMatrix, x0: Vec<f64>) -> Built {
    let n = h.dim();
    let h2 = h.clone();
    built(x0, Box::new(move |x| 0.5 * h.quad_form(x)), Box::new(move |x, g| g.copy_from_slice(&h2.mul_vec(x))))
        .min_at(vec![0.0; n], 0.0)
        .quadratic()
}

/// `½ xᵀHx` with the Hilbert matrix `H`.
pub(crate) fn quad_hilbert(n: usize) -> Built {
    dense_quadratic(hilbert(n), vec![1.0; n])
}

/// Abscissae of the polynomial fit: Chebyshev–Lobatto points on `[-1, 1]`,
/// which cluster at the interval ends.
pub fn palmer_abscissae() -> Vec<f64> {
    const M: usize = 35;
    (0..M).map(|j| -(std::f64::consts::PI * j as f64 / (M - 1) as f64).cos()).collect()
}

/// Least-squares fit `½ Σ_j (Σ_i c_i t_j^{2i} − y_j)²` in even powers up to
/// degree `2(n−1)`.
pub(crate) fn palmer_poly(n: usize) -> Built {
    let t = palmer_abscissae();
    let a: Vec<Vec<f64>> = t.iter().map(|&tj| (0..n).map(|i| (tj * tj).powi(i as i32)).collect()).collect();
    let y: Vec<f64> = t.iter().map(|&tj| (2.0 * tj).cos() + 0.3 * tj.powi(4) + 1.0).collect();
    // Hessian AᵀA and linear term Aᵀy
    let mut h = SquareMatrix::zeros(n);
    let mut b = vec![0.0; n];
    let mut c0 = 0.0;
    for (row, &yj) in a.iter().zip(&y) {
        for i in 0..n {
            b[i] += row[i] * yj;
            for j in 0..n {
                h.set(i, j, h.get(i, j) + row[i] * row[j]);
            }
        }
        c0 += yj * yj;
    }
    let (h2, b2) = (h.clone(), b.clone());
    built(
        vec![1.0; n],
        Box::new(move |x| 0.5 * h.quad_form(x) - x.iter().zip(&b).map(|(u, v)| u * v).sum::<f64>() + 0.5 * c0),
        Box::new(move |x, g| {
            let hx = h2.mul_vec(x);
            for i in 0..g.len() {
                g[i] = hx[i] - b2[i];
            }
        }),
    )
    .quadratic()
}

pub(crate) fn ext_rosenbrock(n: usize) -> Built {
    let x0 = (0..n).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect();
    built(
        x0,
        Box::new(|x| x.chunks(2).map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2)).sum()),
        Box::new(|x, g| {
            for (p, q) in x.chunks(2).zip(g.chunks_mut(2)) {
                let t = p[1] - p[0] * p[0];
                q[0] = -400.0 * p[0] * t - 2.0 * (1.0 - p[0]);
                q[1] = 200.0 * t;
            }
        }),
    )
    .min_at(vec![1.0; n], 0.0)
}

pub(crate) fn ext_powell(n: usize) -> Built {
    let x0 = (0..n).map(|i| [3.0, -1.0, 0.0, 1.0][i % 4]).collect();
    built(
        x0,
        Box::new(|x| {
            x.chunks(4)
                .map(|p| {
                    (p[0] + 10.0 * p[1]).powi(2)
                        + 5.0 * (p[2] - p[3]).powi(2)
                        + (p[1] - 2.0 * p[2]).powi(4)
                        + 10.0 * (p[0] - p[3]).powi(4)
                })
                .sum()
        }),
        Box::new(|x, g| {
            for (p, q) in x.chunks(4).zip(g.chunks_mut(4)) {
                let a = p[0] + 10.0 * p[1];
                let b = p[2] - p[3];
                let c = (p[1] - 2.0 * p[2]).powi(3);
                let d = (p[0] - p[3]).powi(3);
                q[0] = 2.0 * a + 40.0 * d;
                q[1] = 20.0 * a + 4.0 * c;
                q[2] = 10.0 * b - 8.0 * c;
                q[3] = -10.0 * b - 40.0 * d;
            }
        }),
    )
    .min_at(vec![0.0; n], 0.0)
}

/// `Σ (n − Σ_j cos x_j + i(1 − cos x_i) − sin x_i)²`
pub(crate) fn trigonometric(n: usize) -> Built {
    fn residuals(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let sc: f64 = x.iter().map(|v| v.cos()).sum();
        x.iter().enumerate().map(|(i, v)| n - sc + (i + 1) as f64 * (1.0 - v.cos()) - v.sin()).collect()
    }
    built(
        vec![1.0 / n as f64; n],
        Box::new(|x| residuals(x).iter().map(|r| r * r).sum()),
        Box::new(|x, g| {
            let r = residuals(x);
            let sr: f64 = r.iter().sum();
            for (i, (gi, v)) in g.iter_mut().zip(x).enumerate() {
                // ∂r_k/∂x_i = sin x_i for k ≠ i, plus (i+1)·sin x_i − cos x_i for k = i
                *gi = 2.0 * (sr * v.sin() + r[i] * ((i + 1) as f64 * v.sin() - v.cos()));
            }
        }),
    )
}

/// `Σ ((3 − 2x_i)x_i − x_{i−1} − 2x_{i+1} + 1)²` with `x_0 = x_{n+1} = 0`.
pub(crate) fn broyden_tridiag(n: usize) -> Built {
    fn residuals(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let prev = if i > 0 { x[i - 1] } else { 0.0 };
                let next = if i + 1 < n { x[i + 1] } else { 0.0 };
                (3.0 - 2.0 * x[i]) * x[i] - prev - 2.0 * next + 1.0
            })
            .collect()
    }
    built(
        vec![-1.0; n],
        Box::new(|x| residuals(x).iter().map(|r| r * r).sum()),
        Box::new(|x, g| {
            let r = residuals(x);
            let n = x.len();
            for i in 0..n {
                let mut v = 2.0 * r[i] * (3.0 - 4.0 * x[i]);
                if i > 0 {
                    v += 2.0 * r[i - 1] * -2.0;
                }
                if i + 1 < n {
                    v += 2.0 * r[i + 1] * -1.0;
                }
                g[i] = v;
            }
        }),
    )
}

pub(crate) fn ext_beale(n: usize) -> Built {
    const C: [f64; 3] = [1.5, 2.25, 2.625];
    let x0 = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.8 }).collect();
    let mut xmin = vec![3.0; n];
    for v in xmin.iter_mut().skip(1).step_by(2) {
        *v = 0.5;
    }
    built(
        x0,
        Box::new(|x| {
            x.chunks(2)
                .map(|p| (1..=3).map(|k| (C[k - 1] - p[0] * (1.0 - p[1].powi(k as i32))).powi(2)).sum::<f64>())
                .sum()
        }),
        Box::new(|x, g| {
            for (p, q) in x.chunks(2).zip(g.chunks_mut(2)) {
                q[0] = 0.0;
                q[1] = 0.0;
                for k in 1..=3 {
                    let r = C[k - 1] - p[0] * (1.0 - p[1].powi(k as i32));
                    q[0] += 2.0 * r * -(1.0 - p[1].powi(k as i32));
                    q[1] += 2.0 * r * p[0] * k as f64 * p[1].powi(k as i32 - 1);
                }
            }
        }),
    )
    .min_at(xmin, 0.0)
}

pub(crate) fn ext_wood(n: usize) -> Built {
    let x0 = (0..n).map(|i| [-3.0, -1.0, -3.0, -1.0][i % 4]).collect();
    built(
        x0,
        Box::new(|x| {
            x.chunks(4)
                .map(|p| {
                    100.0 * (p[0] * p[0] - p[1]).powi(2)
                        + (p[0] - 1.0).powi(2)
                        + 90.0 * (p[2] * p[2] - p[3]).powi(2)
                        + (1.0 - p[2]).powi(2)
                        + 10.1 * ((p[1] - 1.0).powi(2) + (p[3] - 1.0).powi(2))
                        + 19.8 * (p[1] - 1.0) * (p[3] - 1.0)
                })
                .sum()
        }),
        Box::new(|x, g| {
            for (p, q) in x.chunks(4).zip(g.chunks_mut(4)) {
                let a = p[0] * p[0] - p[1];
                let c = p[2] * p[2] - p[3];
                q[0] = 400.0 * a * p[0] + 2.0 * (p[0] - 1.0);
                q[1] = -200.0 * a + 20.2 * (p[1] - 1.0) + 19.8 * (p[3] - 1.0);
                q[2] = 360.0 * c * p[2] - 2.0 * (1.0 - p[2]);
                q[3] = -180.0 * c + 20.2 * (p[3] - 1.0) + 19.8 * (p[1] - 1.0);
            }
        }),
    )
    .min_at(vec![1.0; n], 0.0)
}

/// `Σ (i/10)(exp x_i − x_i)`
pub(crate) fn raydan1(n: usize) -> Built {
    let fmin = (n * (n + 1)) as f64 / 20.0;
    built(
        vec![1.0; n],
        Box::new(|x| x.iter().enumerate().map(|(i, v)| (i + 1) as f64 / 10.0 * (v.exp() - v)).sum()),
        Box::new(|x, g| {
            for (i, (gi, v)) in g.iter_mut().zip(x).enumerate() {
                *gi = (i + 1) as f64 / 10.0 * (v.exp() - 1.0);
            }
        }),
    )
    .min_at(vec![0.0; n], fmin)
}

/// `Σ (exp x_i − x_i)`
pub(crate) fn raydan2(n: usize) -> Built {
    built(
        vec![1.0; n],
        Box::new(|x| x.iter().map(|v| v.exp() - v).sum()),
        Box::new(|x, g| {
            for (gi, v) in g.iter_mut().zip(x) {
                *gi = v.exp() - 1.0;
            }
        }),
    )
    .min_at(vec![0.0; n], n as f64)
}

/// `Σ 1e-5 (x_i − 1)² + (Σ x_i² − 1/4)²`
pub(crate) fn penalty1(n: usize) -> Built {
    built(
        (1..=n).map(|i| i as f64).collect(),
        Box::new(|x| {
            let s: f64 = x.iter().map(|v| v * v).sum::<f64>() - 0.25;
            1e-5 * x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() + s * s
        }),
        Box::new(|x, g| {
            let s: f64 = x.iter().map(|v| v * v).sum::<f64>() - 0.25;
            for (gi, v) in g.iter_mut().zip(x) {
                *gi = 2e-5 * (v - 1.0) + 4.0 * s * v;
            }
        }),
    )
}

/// `Σ_{i<n} ((x_i² + x_n²)² − 4x_i + 3)`
pub(crate) fn arwhead(n: usize) -> Built {
    let mut xmin = vec![1.0; n];
    xmin[n - 1] = 0.0;
    built(
        vec![1.0; n],
        Box::new(|x| {
            let xn = x[x.len() - 1];
            x[..x.len() - 1].iter().map(|v| (v * v + xn * xn).powi(2) - 4.0 * v + 3.0).sum()
        }),
        Box::new(|x, g| {
            let n = x.len();
            let xn = x[n - 1];
            g[n - 1] = 0.0;
            for i in 0..n - 1 {
                let q = x[i] * x[i] + xn * xn;
                g[i] = 4.0 * q * x[i] - 4.0;
                g[n - 1] += 4.0 * q * xn;
            }
        }),
    )
    .min_at(xmin, 0.0)
}

/// `Σ_{i≤n−2} (x_i² + 100x_{i+1}² + 100x_{i+2}²)`
pub(crate) fn dqdrtic(n: usize) -> Built {
    built(
        vec![3.0; n],
        Box::new(|x| x.windows(3).map(|w| w[0] * w[0] + 100.0 * w[1] * w[1] + 100.0 * w[2] * w[2]).sum()),
        Box::new(|x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..x.len() - 2 {
                g[i] += 2.0 * x[i];
                g[i + 1] += 200.0 * x[i + 1];
                g[i + 2] += 200.0 * x[i + 2];
            }
        }),
    )
    .min_at(vec![0.0; n], 0.0)
    .quadratic()
}

/// `Σ_{i<n} ((x_i² + x_{i+1}²)² − 4x_i + 3)`
pub(crate) fn engval1(n: usize) -> Built {
    built(
        vec![2.0; n],
        Box::new(|x| x.windows(2).map(|w| (w[0] * w[0] + w[1] * w[1]).powi(2) - 4.0 * w[0] + 3.0).sum()),
        Box::new(|x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..x.len() - 1 {
                let q = x[i] * x[i] + x[i + 1] * x[i + 1];
                g[i] += 4.0 * q * x[i] - 4.0;
                g[i + 1] += 4.0 * q * x[i + 1];
            }
        }),
    )
}

/// `Σ_{i<n} 100 (x_{i+1} − x_i + 1 − x_i²)²`
pub(crate) fn fletchcr(n: usize) -> Built {
    built(
        vec![0.0; n],
        Box::new(|x| x.windows(2).map(|w| 100.0 * (w[1] - w[0] + 1.0 - w[0] * w[0]).powi(2)).sum()),
        Box::new(|x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..x.len() - 1 {
                let r = x[i + 1] - x[i] + 1.0 - x[i] * x[i];
                g[i] += 200.0 * r * (-1.0 - 2.0 * x[i]);
                g[i + 1] += 200.0 * r;
            }
        }),
    )
    .min_at(vec![1.0; n], 0.0)
}

pub(crate) fn ext_himmelblau(n: usize) -> Built {
    let mut xmin = vec![3.0; n];
    for v in xmin.iter_mut().skip(1).step_by(2) {
        *v = 2.0;
    }
    built(
        vec![1.0; n],
        Box::new(|x| x.chunks(2).map(|p| (p[0] * p[0] + p[1] - 11.0).powi(2) + (p[0] + p[1] * p[1] - 7.0).powi(2)).sum()),
        Box::new(|x, g| {
            for (p, q) in x.chunks(2).zip(g.chunks_mut(2)) {
                let a = p[0] * p[0] + p[1] - 11.0;
                let b = p[0] + p[1] * p[1] - 7.0;
                q[0] = 4.0 * a * p[0] + 2.0 * b;
                q[1] = 2.0 * a + 4.0 * b * p[1];
            }
        }),
    )
    .min_at(xmin, 0.0)
}

/// `(x_1 − 1)² + Σ_{i≥2} i (2x_i − x_{i−1})²`
pub(crate) fn tridia(n: usize) -> Built {
    let xmin: Vec<f64> = (0..n).map(|i| 0.5f64.powi(i as i32)).collect();
    built(
        vec![1.0; n],
        Box::new(|x| {
            (x[0] - 1.0).powi(2)
                + x.windows(2).enumerate().map(|(i, w)| (i + 2) as f64 * (2.0 * w[1] - w[0]).powi(2)).sum::<f64>()
        }),
        Box::new(|x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            g[0] = 2.0 * (x[0] - 1.0);
            for i in 1..x.len() {
                let r = 2.0 * x[i] - x[i - 1];
                let w = (i + 1) as f64;
                g[i] += 4.0 * w * r;
                g[i - 1] -= 2.0 * w * r;
            }
        }),
    )
    .min_at(xmin, 0.0)
    .quadratic()
}

/// `Σ 4(x_i² − x_1)² + (x_i − 1)²`
pub(crate) fn liarwhd(n: usize) -> Built {
    built(
        vec![4.0; n],
        Box::new(|x| x.iter().map(|v| 4.0 * (v * v - x[0]).powi(2) + (v - 1.0).powi(2)).sum()),
        Box::new(|x, g| {
            let mut g0 = 0.0;
            for (i, v) in x.iter().enumerate() {
                let r = v * v - x[0];
                g[i] = 16.0 * r * v + 2.0 * (v - 1.0);
                g0 -= 8.0 * r;
            }
            g[0] += g0;
        }),
    )
    .min_at(vec![1.0; n], 0.0)
}

/// `Σ (x_i − i)⁴`
pub(crate) fn quartc(n: usize) -> Built {
    built(
        vec![2.0; n],
        Box::new(|x| x.iter().enumerate().map(|(i, v)| (v - (i + 1) as f64).powi(4)).sum()),
        Box::new(|x, g| {
            for (i, (gi, v)) in g.iter_mut().zip(x).enumerate() {
                *gi = 4.0 * (v - (i + 1) as f64).powi(3);
            }
        }),
    )
    .min_at((1..=n).map(|i| i as f64).collect(), 0.0)
}

/// `(x_1 − 1)² + Σ_{i≥2} i (2x_i² − x_{i−1})²`
pub(crate) fn dixon_price(n: usize) -> Built {
    let xmin = (1..=n).map(|i| 2f64.powf(-(2f64.powi(i as i32) - 2.0) / 2f64.powi(i as i32))).collect();
    built(
        vec![1.0; n],
        Box::new(|x| {
            (x[0] - 1.0).powi(2)
                + x.windows(2).enumerate().map(|(i, w)| (i + 2) as f64 * (2.0 * w[1] * w[1] - w[0]).powi(2)).sum::<f64>()
        }),
        Box::new(|x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            g[0] = 2.0 * (x[0] - 1.0);
            for i in 1..x.len() {
                let r = 2.0 * x[i] * x[i] - x[i - 1];
                let w = (i + 1) as f64;
                g[i] += 8.0 * w * r * x[i];
                g[i - 1] -= 2.0 * w * r;
            }
        }),
    )
    .min_at(xmin, 0.0)
}

/// `Σ_{i<n} (x_i + x_{i+1} − 3)² + (x_i − x_{i+1} + 1)⁴`
pub(crate) fn ext_tridiag1(n: usize) -> Built {
    built(
        vec![2.0; n],
        Box::new(|x| x.windows(2).map(|w| (w[0] + w[1] - 3.0).powi(2) + (w[0] - w[1] + 1.0).powi(4)).sum()),
        Box::new(|x, g| {
            g.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..x.len() - 1 {
                let a = 2.0 * (x[i] + x[i + 1] - 3.0);
                let b = 4.0 * (x[i] - x[i + 1] + 1.0).powi(3);
                g[i] += a + b;
                g[i + 1] += a - b;
            }
        }),
    )
}

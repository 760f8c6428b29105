//! Distance formulas written out directly, kept apart from the library so
//! the two can be checked against each other.

#![allow(clippy::needless_range_loop)]

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    1.0 - uv / (uu.sqrt() * vv.sqrt())
}

pub fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        s += (u[i] - v[i]).powi(2);
    }
    s.sqrt()
}

pub fn manhattan(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        s += (u[i] - v[i]).abs();
    }
    s
}

pub fn bray_curtis(u: &[f64], v: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..u.len() {
        num += (u[i] - v[i]).abs();
        den += (u[i] + v[i]).abs();
    }
    num / den
}

pub fn canberra(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        let den = u[i].abs() + v[i].abs();
        if den > 0.0 {
            s += (u[i] - v[i]).abs() / den;
        }
    }
    s
}

pub fn pearson(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
    let (mu, mv) = (mean(u), mean(v));
    let mut cov = 0.0;
    let mut su = 0.0;
    let mut sv = 0.0;
    for i in 0..u.len() {
        cov += (u[i] - mu) * (v[i] - mv);
        su += (u[i] - mu).powi(2);
        sv += (v[i] - mv).powi(2);
    }
    1.0 - cov / (su.sqrt() * sv.sqrt())
}

/// Sample covariance (n - 1) plus `eps_scale * trace / d` on the diagonal.
pub fn regularized_covariance(samples: &[Vec<f64>], eps_scale: f64) -> Vec<Vec<f64>> {
    let n = samples.len();
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for j in 0..d {
            mean[j] += s[j] / n as f64;
        }
    }
    let mut c = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for s in samples {
                acc += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
            c[i][j] = acc / (n - 1) as f64;
        }
    }
    let trace: f64 = (0..d).map(|i| c[i][i]).sum();
    let eps = if trace > 0.0 {
        eps_scale * trace / d as f64
    } else {
        eps_scale
    };
    for (i, row) in c.iter_mut().enumerate() {
        row[i] += eps;
    }
    c
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..d).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..2 * d {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[d..].to_vec()).collect()
}

pub fn mahalanobis(u: &[f64], v: &[f64], inverse: &[Vec<f64>]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..d.len() {
        for j in 0..d.len() {
            q += d[i] * inverse[i][j] * d[j];
        }
    }
    q.sqrt()
}

/// Relative error, falling back to absolute error near zero.
pub fn rel_err(got: f64, want: f64) -> f64 {
    if want.abs() > 1e-6 {
        (got - want).abs() / want.abs()
    } else {
        (got - want).abs()
    }
}

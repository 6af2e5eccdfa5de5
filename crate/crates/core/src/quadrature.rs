//! Quadrature rules and real spherical harmonics.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Number of real spherical harmonics of degree `<= degree`.
pub fn harmonic_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Index of `Y_{l,m}` in the flat layout used by [`real_harmonics`].
pub fn harmonic_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Orthonormal real spherical harmonics `Y_{l,m}(p)`, `l <= degree`, at a unit vector `p`.
///
/// Layout: index `l^2 + l + m`, `m = -l..=l`; negative `m` carries `sin(m phi)`.
pub fn real_harmonics(degree: usize, p: [f64; 3], out: &mut [f64]) {
    let [x, y, z] = p;
    let n = degree;
    debug_assert!(out.len() >= harmonic_count(n));
    // q[l][m] = normalized associated Legendre divided by sin^m(theta), built column by column.
    // Re/Im of (x + i y)^m supply sin^m(theta) cos(m phi) and sin^m(theta) sin(m phi).
    let mut re = 1.0;
    let mut im = 0.0;
    let mut qmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=n {
        if m > 0 {
            let mf = m as f64;
            qmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
            let (r2, i2) = (re * x - im * y, re * y + im * x);
            re = r2;
            im = i2;
        }
        let scale = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
        let mut q_lm2 = 0.0;
        let mut q_lm1 = qmm;
        emit(out, m, m, q_lm1, scale, re, im);
        if m < n {
            let q = (2.0 * m as f64 + 3.0).sqrt() * z * qmm;
            q_lm2 = q_lm1;
            q_lm1 = q;
            emit(out, m + 1, m, q_lm1, scale, re, im);
        }
        for l in (m + 2)..=n {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let q = a * (z * q_lm1 - b * q_lm2);
            q_lm2 = q_lm1;
            q_lm1 = q;
            emit(out, l, m, q_lm1, scale, re, im);
        }
    }
}

#[inline]
fn emit(out: &mut [f64], l: usize, m: usize, q: f64, scale: f64, re: f64, im: f64) {
    let base = l * l + l;
    if m == 0 {
        out[base] = q;
    } else {
        out[base + m] = scale * q * re;
        out[base - m] = scale * q * im;
    }
}

/// Symmetric 6-point triangle rule, exact for degree 4. Barycentric points and weights summing to 1.
pub fn triangle_rule_6() -> [([f64; 3], f64); 6] {
    let a1 = 0.445_948_490_915_965;
    let b1 = 1.0 - 2.0 * a1;
    let w1 = 0.223_381_589_678_011;
    let a2 = 0.091_576_213_509_771;
    let b2 = 1.0 - 2.0 * a2;
    let w2 = 0.109_951_743_655_322;
    [
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Collapsed-coordinate tensor rule on the reference tetrahedron `x, y, z >= 0, x + y + z <= 1`.
/// Returns points and weights summing to 1/6.
pub fn tetra_rule(n: usize) -> Vec<([f64; 3], f64)> {
    let (g, gw) = gauss_legendre_interval(n, 0.0, 1.0);
    let mut out = Vec::with_capacity(n * n * n);
    for (i, &u) in g.iter().enumerate() {
        for (j, &v) in g.iter().enumerate() {
            for (k, &w) in g.iter().enumerate() {
                let x = u;
                let y = v * (1.0 - u);
                let z = w * (1.0 - u) * (1.0 - v);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                out.push(([x, y, z], gw[i] * gw[j] * gw[k] * jac));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for p in 0..=13 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
            assert!((got - exact).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn harmonics_are_orthonormal_on_product_grid() {
        let deg = 6;
        let nt = deg + 1;
        let np = 2 * deg + 2;
        let (z, wz) = gauss_legendre(nt);
        let l = harmonic_count(deg);
        let mut gram = vec![0.0; l * l];
        let mut y = vec![0.0; l];
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).sqrt();
            for k in 0..np {
                let phi = 2.0 * PI * k as f64 / np as f64;
                real_harmonics(deg, [s * phi.cos(), s * phi.sin(), *zi], &mut y);
                let w = wi * 2.0 * PI / np as f64;
                for a in 0..l {
                    for b in 0..l {
                        gram[a * l + b] += w * y[a] * y[b];
                    }
                }
            }
        }
        for a in 0..l {
            for b in 0..l {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((gram[a * l + b] - e).abs() < 1e-12, "({a},{b}) = {}", gram[a * l + b]);
            }
        }
    }

    #[test]
    fn degree_one_harmonics_are_coordinates() {
        let mut y = vec![0.0; 4];
        let p = [0.36, 0.48, 0.8];
        real_harmonics(1, p, &mut y);
        let c = (3.0 / (4.0 * PI)).sqrt();
        assert!((y[harmonic_index(1, 0)] - c * p[2]).abs() < 1e-14);
        assert!((y[harmonic_index(1, 1)] - c * p[0]).abs() < 1e-14);
        assert!((y[harmonic_index(1, -1)] - c * p[1]).abs() < 1e-14);
    }

    #[test]
    fn triangle_and_tetra_rules() {
        let t = triangle_rule_6();
        // integral of x^2 y over unit right triangle (area 1/2) = 1/60 (in barycentric l1, l2)
        let got: f64 = t.iter().map(|(b, w)| 0.5 * w * b[0] * b[0] * b[1]).sum();
        assert!((got - 1.0 / 60.0).abs() < 1e-12);
        let r = tetra_rule(4);
        let vol: f64 = r.iter().map(|(_, w)| w).sum();
        assert!((vol - 1.0 / 6.0).abs() < 1e-14);
        // x y z over reference tetrahedron = 1/720
        let got: f64 = r.iter().map(|(p, w)| w * p[0] * p[1] * p[2]).sum();
        assert!((got - 1.0 / 720.0).abs() < 1e-14);
    }
}

//! Dense linear algebra with residual certification.

use rand::Rng;

use crate::error::{Error, Result};

pub const EPS_M: f64 = f64::EPSILON;
/// Working tolerance.
pub const EPS: f64 = 1e5 * EPS_M;
const NEWTON_CAP: usize = 3;

pub fn accept_threshold(order: usize) -> f64 {
    order as f64 * EPS
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        SquareMatrix {
            n,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul(&self, o: &SquareMatrix) -> SquareMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = o.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub fn max_abs_diff(&self, o: &SquareMatrix) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedInverse {
    pub b: SquareMatrix,
    pub cond_estimate: f64,
    pub refined: bool,
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn lu_inverse(c: &SquareMatrix) -> Result<SquareMatrix> {
    let n = c.n;
    let mut a = c.data.clone();
    let mut inv = SquareMatrix::identity(n).data;
    let tiny = n as f64 * EPS_M * c.norm_inf().max(f64::MIN_POSITIVE);
    for p in 0..n {
        let (piv, pmax) = (p..n)
            .map(|r| (r, a[r * n + p].abs()))
            .fold((p, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pmax <= tiny {
            return Err(Error::SingularMatrix);
        }
        if piv != p {
            for j in 0..n {
                a.swap(p * n + j, piv * n + j);
                inv.swap(p * n + j, piv * n + j);
            }
        }
        let d = 1.0 / a[p * n + p];
        for j in 0..n {
            a[p * n + j] *= d;
            inv[p * n + j] *= d;
        }
        for r in 0..n {
            if r == p {
                continue;
            }
            let f = a[r * n + p];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r * n + j] -= f * a[p * n + j];
                inv[r * n + j] -= f * inv[p * n + j];
            }
        }
    }
    Ok(SquareMatrix { n, data: inv })
}

/// ‖I − C·B‖∞ in working precision.
pub fn residual_norm(c: &SquareMatrix, b: &SquareMatrix) -> f64 {
    let cb = c.mul(b);
    (0..c.n)
        .map(|i| {
            cb.row(i)
                .iter()
                .enumerate()
                .map(|(j, &x)| ((i == j) as u8 as f64 - x).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// I − C·B with each entry accumulated in double-double.
pub fn residual_extended(c: &SquareMatrix, b: &SquareMatrix) -> SquareMatrix {
    let n = c.n;
    let mut r = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let (mut hi, mut lo) = (if i == j { 1.0 } else { 0.0 }, 0.0);
            for k in 0..n {
                let (p, e) = two_prod(c.get(i, k), b.get(k, j));
                let (s, t) = two_sum(hi, -p);
                hi = s;
                lo += t - e;
            }
            let (s, t) = two_sum(hi, lo);
            r.set(i, j, s + t);
        }
    }
    r
}

/// Newton steps up to the cap; returns the best iterate and its residual norm.
pub fn refine_report(c: &SquareMatrix, b: &SquareMatrix) -> (SquareMatrix, f64) {
    let mut b = b.clone();
    let mut r = residual_extended(c, &b);
    let mut norm = r.norm_inf();
    for _ in 0..NEWTON_CAP {
        if norm == 0.0 {
            break;
        }
        let mut next = b.clone();
        let br = b.mul(&r);
        for (x, d) in next.data.iter_mut().zip(&br.data) {
            *x += d;
        }
        let r2 = residual_extended(c, &next);
        let n2 = r2.norm_inf();
        if !(n2 < norm) {
            break;
        }
        b = next;
        r = r2;
        norm = n2;
    }
    (b, norm)
}

/// Newton iteration `B ← B + B(I − CB)` with the residual in double-double.
pub fn refine_inverse(c: &SquareMatrix, b: &SquareMatrix) -> Result<SquareMatrix> {
    let (b, norm) = refine_report(c, b);
    if norm.is_finite() && norm <= accept_threshold(c.n) {
        Ok(b)
    } else {
        Err(Error::IllConditioned(norm))
    }
}

/// Certify a candidate inverse, falling back to Newton recovery.
pub fn certify(c: &SquareMatrix, b: SquareMatrix, residual: f64) -> Result<CertifiedInverse> {
    let cn = c.norm_inf();
    let cond = cn * b.norm_inf();
    let thr = accept_threshold(c.n);
    if residual <= thr && cond * EPS_M <= EPS {
        return Ok(CertifiedInverse {
            b,
            cond_estimate: cond,
            refined: false,
        });
    }
    let b = refine_inverse(c, &b)?;
    let cond = cn * b.norm_inf();
    Ok(CertifiedInverse {
        b,
        cond_estimate: cond,
        refined: true,
    })
}

pub fn invert_certified(c: &SquareMatrix) -> Result<CertifiedInverse> {
    let b = lu_inverse(c)?;
    let res = residual_norm(c, &b);
    certify(c, b, res)
}

/// `(A − u·v)^{-1}` from `B = A^{-1}`.
pub fn sherman_morrison(b: &SquareMatrix, u: &[f64], v: &[f64]) -> Result<SquareMatrix> {
    let n = b.n;
    let bu = b.mul_vec(u);
    let vb: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| v[k] * b.get(k, j)).sum())
        .collect();
    let denom = 1.0 - v.iter().zip(&bu).map(|(a, c)| a * c).sum::<f64>();
    let scale = b.norm_inf().max(1.0);
    if denom.abs() <= EPS * scale {
        return Err(Error::SingularUpdate);
    }
    let mut out = b.clone();
    for i in 0..n {
        let f = bu[i] / denom;
        if f == 0.0 {
            continue;
        }
        for j in 0..n {
            out.data[i * n + j] += f * vb[j];
        }
    }
    Ok(out)
}

fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Haar-random orthogonal matrix: Gaussian draw, then Gram-Schmidt with positive diagonal.
pub fn sample_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SquareMatrix {
    loop {
        let mut g = Vec::with_capacity(n * n + 1);
        while g.len() < n * n {
            let (a, b) = box_muller(rng);
            g.push(a);
            g.push(b);
        }
        g.truncate(n * n);
        // columns of g are the vectors to orthonormalise
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| g[i * n + j]).collect())
            .collect();
        let mut ok = true;
        for j in 0..n {
            for _pass in 0..2 {
                for k in 0..j {
                    let d: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                    let ck = cols[k].clone();
                    for (x, y) in cols[j].iter_mut().zip(&ck) {
                        *x -= d * y;
                    }
                }
            }
            let nrm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|x| *x /= nrm);
        }
        if !ok {
            continue;
        }
        let mut q = SquareMatrix::zeros(n);
        for (j, c) in cols.iter().enumerate() {
            for (i, &x) in c.iter().enumerate() {
                q.set(i, j, x);
            }
        }
        return q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> SquareMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SquareMatrix::zeros(n);
        for x in m.data.iter_mut() {
            *x = rng.gen::<f64>() * 2.0 - 1.0;
        }
        for i in 0..n {
            m.data[i * n + i] += n as f64;
        }
        m
    }

    #[test]
    fn identity_inverse() {
        let ci = invert_certified(&SquareMatrix::identity(4)).unwrap();
        assert_eq!(ci.b, SquareMatrix::identity(4));
        assert_eq!(ci.cond_estimate, 1.0);
        assert!(!ci.refined);
    }

    #[test]
    fn involutive_2x2() {
        let c = SquareMatrix::from_rows(&[vec![-1.0, 3.0], vec![0.0, 1.0]]);
        let ci = invert_certified(&c).unwrap();
        assert!(ci.b.max_abs_diff(&c) < 1e-15);
    }

    #[test]
    fn random_residual() {
        let c = random(10, 3);
        let ci = invert_certified(&c).unwrap();
        assert!(residual_norm(&c, &ci.b) <= 1e3 * 10.0 * EPS_M);
    }

    #[test]
    fn singular_rejected() {
        let c = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(invert_certified(&c).unwrap_err(), Error::SingularMatrix);
        let b = SquareMatrix::identity(2);
        assert!(matches!(
            refine_inverse(&c, &b),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn refine_fixed_point() {
        let c = SquareMatrix::identity(3);
        assert_eq!(refine_inverse(&c, &c).unwrap(), c);
    }

    #[test]
    fn refine_perturbed() {
        let c = SquareMatrix::identity(4);
        let mut b = c.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for x in b.data.iter_mut() {
            *x += 1e-6 * (rng.gen::<f64>() - 0.5);
        }
        let r = refine_inverse(&c, &b).unwrap();
        assert!(residual_extended(&c, &r).norm_inf() < 1e-12);
    }

    #[test]
    fn sherman_morrison_cases() {
        let b = SquareMatrix::identity(2);
        let out = sherman_morrison(&b, &[1.0, 0.0], &[0.0, 0.5]).unwrap();
        assert_eq!(
            out,
            SquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]])
        );
        assert_eq!(
            sherman_morrison(&b, &[1.0, 0.0], &[1.0, 0.0]).unwrap_err(),
            Error::SingularUpdate
        );
    }

    #[test]
    fn sherman_morrison_random() {
        let a = random(5, 11);
        let b = invert_certified(&a).unwrap().b;
        let u = [0.3, -0.2, 0.5, 0.1, 0.7];
        let v = [0.2, 0.4, -0.3, 0.6, 0.1];
        let mut am = a.clone();
        for i in 0..5 {
            for j in 0..5 {
                am.data[i * 5 + j] -= u[i] * v[j];
            }
        }
        let fresh = invert_certified(&am).unwrap().b;
        assert!(sherman_morrison(&b, &u, &v).unwrap().max_abs_diff(&fresh) < 1e-10);
    }

    #[test]
    fn orthogonal_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = sample_orthogonal(&mut rng, 1);
        assert!((q.data[0].abs() - 1.0).abs() < 1e-15);
        for n in [2, 5, 8] {
            let mut r1 = ChaCha8Rng::seed_from_u64(n as u64);
            let mut r2 = ChaCha8Rng::seed_from_u64(n as u64);
            let q = sample_orthogonal(&mut r1, n);
            assert_eq!(q, sample_orthogonal(&mut r2, n));
            let qtq = q.transpose().mul(&q);
            assert!(qtq.max_abs_diff(&SquareMatrix::identity(n)) <= n as f64 * 1e-12);
            let det = crate::linalg::tests::det(&q);
            assert!((det.abs() - 1.0).abs() < 1e-10);
        }
    }

    pub(crate) fn det(m: &SquareMatrix) -> f64 {
        let n = m.n;
        let mut a = m.data.clone();
        let mut d = 1.0;
        for p in 0..n {
            let piv = (p..n)
                .max_by(|&x, &y| a[x * n + p].abs().total_cmp(&a[y * n + p].abs()))
                .unwrap();
            if piv != p {
                for j in 0..n {
                    a.swap(p * n + j, piv * n + j);
                }
                d = -d;
            }
            d *= a[p * n + p];
            for r in p + 1..n {
                let f = a[r * n + p] / a[p * n + p];
                for j in p..n {
                    a[r * n + j] -= f * a[p * n + j];
                }
            }
        }
        d
    }
}

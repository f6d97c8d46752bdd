//! Slow, independent reference implementations used to cross-check the
//! production paths. Nothing here shares code with the eigendecomposition
//! rotations, the closed-form readout or the entrywise dephasing channel.

use num_complex::Complex64 as C64;

/// Row-major dense complex matrix with naive arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct RefMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl RefMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    fn zip(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for RefMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RefMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &RefMatrix) -> RefMatrix {
    let norm = a.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut sum = RefMatrix::identity(a.dim());
    let mut term = RefMatrix::identity(a.dim());
    for k in 1..=30 {
        term = term.mul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        if term.norm_inf() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

fn m_value(n: usize, index: usize) -> f64 {
    index as f64 - n as f64 / 2.0
}

/// `Jx = (J+ + J-)/2` from the raising operator
/// `J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>`.
pub fn ladder_jx(n: usize) -> RefMatrix {
    let dim = n + 1;
    let j = n as f64 / 2.0;
    let mut raise = RefMatrix::zeros(dim);
    for i in 0..n {
        let m = m_value(n, i);
        raise[(i + 1, i)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    raise.add(&raise.adjoint()).scale(C64::new(0.5, 0.0))
}

pub fn jz(n: usize) -> RefMatrix {
    RefMatrix::diagonal(&(0..=n).map(|i| C64::new(m_value(n, i), 0.0)).collect::<Vec<_>>())
}

/// `exp(i sign angle Jx)` through [`expm`].
pub fn rotation_x(n: usize, angle: f64, sign: f64) -> RefMatrix {
    expm(&ladder_jx(n).scale(C64::new(0.0, sign * angle)))
}

/// `exp(i tau Jz^2)`.
pub fn twist(n: usize, tau: f64) -> RefMatrix {
    RefMatrix::diagonal(
        &(0..=n)
            .map(|i| {
                let m = m_value(n, i);
                C64::from_polar(1.0, tau * m * m)
            })
            .collect::<Vec<_>>(),
    )
}

/// `exp(-i phi Jz)`.
pub fn phase(n: usize, phi: f64) -> RefMatrix {
    RefMatrix::diagonal(
        &(0..=n)
            .map(|i| C64::from_polar(1.0, -phi * m_value(n, i)))
            .collect::<Vec<_>>(),
    )
}

/// Interferometer output built entirely from matrix exponentials.
pub fn readout_by_expm(input: &[C64], phi: f64, tau: f64) -> Vec<C64> {
    let n = input.len() - 1;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let u = rotation_x(n, half_pi, -1.0)
        .mul(&twist(n, tau))
        .mul(&rotation_x(n, half_pi, 1.0))
        .mul(&phase(n, phi));
    u.mul_vec(input)
}

/// Right-hand side of the twisting master equation
/// `d rho/d tau = i [Jz^2, rho] + g (Jz rho Jz - {Jz^2, rho}/2)`.
pub fn lindblad_rhs(rho: &RefMatrix, jz: &RefMatrix, jz2: &RefMatrix, g: f64) -> RefMatrix {
    let i = C64::new(0.0, 1.0);
    let comm = jz2.mul(rho).sub(&rho.mul(jz2)).scale(i);
    let anti = jz2.mul(rho).add(&rho.mul(jz2)).scale(C64::new(0.5, 0.0));
    let dissip = jz.mul(rho).mul(jz).sub(&anti).scale(C64::new(g, 0.0));
    comm.add(&dissip)
}

/// Classic fourth-order Runge-Kutta integration of [`lindblad_rhs`] from 0
/// to `tau` with a fixed step no larger than `step`.
pub fn rk4_dephasing(rho0: &RefMatrix, tau: f64, g: f64, step: f64) -> RefMatrix {
    let n = rho0.dim() - 1;
    let jz = jz(n);
    let jz2 = jz.mul(&jz);
    let steps = (tau / step).ceil().max(1.0) as usize;
    let h = tau / steps as f64;
    let f = |r: &RefMatrix| lindblad_rhs(r, &jz, &jz2, g);
    let half = C64::new(h / 2.0, 0.0);
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = f(&rho);
        let k2 = f(&rho.add(&k1.scale(half)));
        let k3 = f(&rho.add(&k2.scale(half)));
        let k4 = f(&rho.add(&k3.scale(C64::new(h, 0.0))));
        let incr = k1
            .add(&k2.scale(C64::new(2.0, 0.0)))
            .add(&k3.scale(C64::new(2.0, 0.0)))
            .add(&k4)
            .scale(C64::new(h / 6.0, 0.0));
        rho = rho.add(&incr);
    }
    rho
}

/// `|psi><psi|`.
pub fn projector(psi: &[C64]) -> RefMatrix {
    let mut m = RefMatrix::zeros(psi.len());
    for i in 0..psi.len() {
        for j in 0..psi.len() {
            m[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    m
}

/// Central finite difference of a vector-valued function.
pub fn central_difference(f: impl Fn(f64) -> Vec<f64>, x: f64, h: f64) -> Vec<f64> {
    let plus = f(x + h);
    let minus = f(x - h);
    plus.iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect()
}

//! Linear state-space models with structured (Toeplitz/circulant) state
//! matrices, their Fourier-mode spectral analysis, and convolutional
//! application.
//!
//! A circulant state matrix is diagonalized by the discrete Fourier modes, so
//! applying it is a cyclic convolution and simulating it decouples into
//! independent scalar systems, one per mode. Toeplitz-but-not-circulant
//! matrices are supported only through dense application.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelProfile;

/// Circulant matrix, stored as its first row `c`.
///
/// The generated matrix satisfies `A[i][j] = c[(j - i) mod N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculantSpec {
    first_row: Vec<f64>,
}

impl CirculantSpec {
    pub fn new(first_row: Vec<f64>) -> Result<Self> {
        if first_row.is_empty() {
            return Err(Error::ShapeMismatch("circulant first row is empty".into()));
        }
        if first_row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "circulant first row has non-finite entries".into(),
            ));
        }
        Ok(Self { first_row })
    }

    pub fn n(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    /// Materialize the dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.first_row[(n + j - i) % n])
    }

    /// Subtract the row mean so every row sums to zero (the DC mode becomes
    /// neutral). Used for diffusion-style dynamics.
    pub fn zero_row_sum(&self) -> Self {
        let mean = self.first_row.iter().sum::<f64>() / self.n() as f64;
        Self {
            first_row: self.first_row.iter().map(|v| v - mean).collect(),
        }
    }
}

/// Build a circulant spec from a center-surround kernel on a ring of `n`
/// nodes: `c[k] = kernel(min(k, n - k))`.
pub fn make_mexican_hat_circulant(n: usize, kernel: &KernelProfile) -> Result<CirculantSpec> {
    if n < 3 {
        return Err(Error::ShapeMismatch(format!(
            "ring size must be >= 3, got {n}"
        )));
    }
    kernel.validate()?;
    let row = (0..n)
        .map(|k| kernel.weight(k.min(n - k) as f64))
        .collect();
    CirculantSpec::new(row)
}

/// Spectral decomposition of a circulant matrix: eigenvalue per Fourier mode.
#[derive(Debug, Clone)]
pub struct Eigenmodes {
    n: usize,
    eigenvalues: Vec<Complex64>,
}

impl Eigenmodes {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Unit-norm Fourier-mode eigenvector `f_k[m] = exp(2*pi*i*k*m/n)/sqrt(n)`.
    pub fn fourier_mode(&self, k: usize) -> Vec<Complex64> {
        let n = self.n as f64;
        let norm = 1.0 / n.sqrt();
        (0..self.n)
            .map(|m| {
                let phase = 2.0 * std::f64::consts::PI * (k * m % self.n) as f64 / n;
                Complex64::new(phase.cos(), phase.sin()) * norm
            })
            .collect()
    }

    /// Largest real part across modes; positive means the continuous-time
    /// system has a growing mode.
    pub fn max_growth_rate(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spectral norm of the (normal) circulant matrix: max |lambda_k|.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

/// Eigenvalues and eigenvectors of the circulant matrix.
///
/// With the `A[i][j] = c[(j - i) mod N]` convention, the mode
/// `f_k[m] = exp(2*pi*i*k*m/N)/sqrt(N)` has eigenvalue
/// `lambda_k = sum_j c[j] * exp(+2*pi*i*j*k/N)`, i.e. the conjugate-kernel
/// transform of `c`. `A * f_k = lambda_k * f_k` holds for any real or complex
/// first row, which the spectral tests check against a dense oracle.
pub fn eigenmodes(spec: &CirculantSpec) -> Eigenmodes {
    let n = spec.n();
    let mut buf: Vec<Complex<f64>> = spec
        .first_row
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    // Unnormalized inverse FFT computes sum_j c_j e^{+2 pi i jk/n}.
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Eigenmodes {
        n,
        eigenvalues: buf,
    }
}

/// Multiply `y = A x` for a circulant `A` via its Fourier diagonalization.
pub fn circulant_apply(spec: &CirculantSpec, x: &[f64]) -> Result<Vec<f64>> {
    let n = spec.n();
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "input length {} does not match circulant size {n}",
            x.len()
        )));
    }
    let modes = eigenmodes(spec);
    let mut planner = FftPlanner::new();
    let mut xhat: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut xhat);
    for (v, l) in xhat.iter_mut().zip(modes.eigenvalues.iter()) {
        *v *= l;
    }
    planner.plan_fft_inverse(n).process(&mut xhat);
    let scale = 1.0 / n as f64;
    Ok(xhat.into_iter().map(|v| v.re * scale).collect())
}

/// Discretization method for `simulate_ssm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMethod {
    /// Explicit Euler: `x' = x + dt (A x + B u)`.
    Euler,
    /// Exact exponential stepping per Fourier mode with zero-order-hold
    /// inputs. Requires a circulant state matrix.
    Exact,
}

/// Linear system `xdot = A x + B u`, `y = C x + D u`, sampled at `dt`.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    dt: f64,
    /// Set when `a` was built from a circulant spec; enables exact stepping.
    circulant: Option<CirculantSpec>,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveParameter(format!(
                "dt must be > 0, got {dt}"
            )));
        }
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "inconsistent system dimensions: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        for m in [&a, &b, &c, &d] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch(
                    "system matrices must be finite".into(),
                ));
            }
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            dt,
            circulant: None,
        })
    }

    /// Build a model whose state matrix is the given circulant. Emits a
    /// warning when the connectivity has a growing mode; stability is
    /// reported, not enforced.
    pub fn from_circulant(
        spec: CirculantSpec,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        let growth = eigenmodes(&spec).max_growth_rate();
        if growth > 0.0 {
            log::warn!("circulant state matrix has a growing mode (max Re lambda = {growth:.4})");
        }
        let mut model = Self::new(spec.to_dense(), b, c, d, dt)?;
        model.circulant = Some(spec);
        Ok(model)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn circulant(&self) -> Option<&CirculantSpec> {
        self.circulant.as_ref()
    }
}

/// Result of a simulation: output per step, plus the state trajectory.
#[derive(Debug, Clone)]
pub struct SsmTrajectory {
    pub outputs: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
}

const STATE_GUARD: f64 = 1e12;

/// Simulate the system over an input sequence from `x0 = 0`.
///
/// The output at step `t` is computed from the pre-update state:
/// `y_t = C x_t + D u_t`.
pub fn simulate_ssm(
    model: &StateSpaceModel,
    inputs: &[Vec<f64>],
    method: StepMethod,
) -> Result<SsmTrajectory> {
    simulate_ssm_from(model, inputs, method, None)
}

/// Same as `simulate_ssm` with an explicit initial state.
pub fn simulate_ssm_from(
    model: &StateSpaceModel,
    inputs: &[Vec<f64>],
    method: StepMethod,
    x0: Option<&[f64]>,
) -> Result<SsmTrajectory> {
    if inputs.is_empty() {
        return Err(Error::ShapeMismatch("input sequence is empty".into()));
    }
    let m = model.input_dim();
    for (t, u) in inputs.iter().enumerate() {
        if u.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "input at step {t} has dimension {}, expected {m}",
                u.len()
            )));
        }
    }
    let n = model.state_dim();
    let mut x = match x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "initial state has dimension {}, expected {n}",
                    x0.len()
                )));
            }
            nalgebra::DVector::from_column_slice(x0)
        }
        None => nalgebra::DVector::zeros(n),
    };

    let exact = match method {
        StepMethod::Euler => None,
        StepMethod::Exact => {
            let spec = model.circulant.as_ref().ok_or_else(|| {
                Error::ShapeMismatch(
                    "exact stepping requires a circulant state matrix".into(),
                )
            })?;
            Some(ExactStepper::new(spec, model.dt))
        }
    };

    let mut outputs = Vec::with_capacity(inputs.len());
    let mut states = Vec::with_capacity(inputs.len());
    for (t, u) in inputs.iter().enumerate() {
        let uv = nalgebra::DVector::from_column_slice(u);
        let y = &model.c * &x + &model.d * &uv;
        outputs.push(y.iter().copied().collect());
        states.push(x.iter().copied().collect());

        let drive = &model.b * &uv;
        match &exact {
            None => {
                let dx = &model.a * &x + &drive;
                x += dx * model.dt;
            }
            Some(stepper) => {
                stepper.advance(&mut x, &drive);
            }
        }
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !peak.is_finite() || peak > STATE_GUARD {
            return Err(Error::UnstableStep(format!(
                "state magnitude {peak:.3e} after step {t}"
            )));
        }
    }
    Ok(SsmTrajectory { outputs, states })
}

/// Per-mode exponential integrator for a circulant `A` with zero-order-hold
/// inputs: in the Fourier basis every mode is the scalar system
/// `xhat' = lambda xhat + bhat`, stepped exactly.
struct ExactStepper {
    n: usize,
    /// exp(lambda_k dt)
    alpha: Vec<Complex64>,
    /// (exp(lambda_k dt) - 1) / lambda_k
    phi: Vec<Complex64>,
    planner: std::cell::RefCell<FftPlanner<f64>>,
}

impl ExactStepper {
    fn new(spec: &CirculantSpec, dt: f64) -> Self {
        let modes = eigenmodes(spec);
        let mut alpha = Vec::with_capacity(modes.n);
        let mut phi = Vec::with_capacity(modes.n);
        for l in modes.eigenvalues() {
            let ldt = l * dt;
            let a = ldt.exp();
            alpha.push(a);
            // (e^{l dt} - 1)/l, with the series limit for small |l dt|.
            if ldt.norm() < 1e-8 {
                phi.push(Complex64::new(dt, 0.0) * (Complex64::new(1.0, 0.0) + ldt / 2.0));
            } else {
                phi.push((a - Complex64::new(1.0, 0.0)) / l);
            }
        }
        Self {
            n: modes.n,
            alpha,
            phi,
            planner: std::cell::RefCell::new(FftPlanner::new()),
        }
    }

    fn advance(&self, x: &mut nalgebra::DVector<f64>, drive: &nalgebra::DVector<f64>) {
        let n = self.n;
        let mut planner = self.planner.borrow_mut();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        let mut xh: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut bh: Vec<Complex<f64>> = drive.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fwd.process(&mut xh);
        fwd.process(&mut bh);
        for k in 0..n {
            xh[k] = self.alpha[k] * xh[k] + self.phi[k] * bh[k];
        }
        inv.process(&mut xh);
        let scale = 1.0 / n as f64;
        for (dst, v) in x.iter_mut().zip(xh.iter()) {
            *dst = v.re * scale;
        }
    }
}

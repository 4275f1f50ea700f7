//! Ground-truth plant simulation, seeded noise streams, and the two
//! benchmark system factories: a marginally unstable Laplacian chain and a
//! linearized 6-DOF quadrotor with partial loss of rotor effectiveness.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::control_math::{dlqr, spectral_radius};
use crate::error::{Error, Result};

/// True plant dynamics `x' = A* x + B* (u - input_bias) + w`.
///
/// `input_bias` is the constant actuator offset subtracted inside the input
/// map; for the quadrotor it encodes the gravity feedforward so that the
/// hovering input produces zero net acceleration at full rotor effectiveness.
#[derive(Debug, Clone)]
pub struct PlantModel {
    pub a_star: DMatrix<f64>,
    pub b_star: DMatrix<f64>,
    /// Per-component standard deviation of the process noise.
    pub sigma_w: f64,
    pub input_bias: Option<DVector<f64>>,
}

impl PlantModel {
    pub fn state_dim(&self) -> usize {
        self.a_star.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b_star.ncols()
    }

    /// Advances the plant one step: `A* x + B* (u - input_bias) + w`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        let (n, m) = (self.state_dim(), self.input_dim());
        if x.len() != n || u.len() != m || w.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "plant_step: expected x:{n}, u:{m}, w:{n}; got x:{}, u:{}, w:{}",
                x.len(),
                u.len(),
                w.len()
            )));
        }
        let effective = match &self.input_bias {
            Some(bias) => u - bias,
            None => u.clone(),
        };
        Ok(&self.a_star * x + &self.b_star * effective + w)
    }
}

/// The matched-uncertainty decomposition of the plant around a known
/// Schur-stable reference pair: `A_m = A* + B_m Theta_A*` and
/// `B* = B_m Theta_B*`.
#[derive(Debug, Clone)]
pub struct MatchedStructure {
    pub a_m: DMatrix<f64>,
    pub b_m: DMatrix<f64>,
    pub theta_a_star: DMatrix<f64>,
    pub theta_b_star: DMatrix<f64>,
}

impl MatchedStructure {
    /// Stacked true parameter `[Theta_A*, Theta_B*]`, m x (n+m).
    pub fn theta_star(&self) -> DMatrix<f64> {
        let m = self.theta_a_star.nrows();
        let n = self.theta_a_star.ncols();
        let mut theta = DMatrix::zeros(m, n + m);
        theta.view_mut((0, 0), (m, n)).copy_from(&self.theta_a_star);
        theta.view_mut((0, n), (m, m)).copy_from(&self.theta_b_star);
        theta
    }

    /// Checks the matching identities and reference stability.
    pub fn validate(&self, plant: &PlantModel, tol: f64) -> Result<()> {
        let lhs_a = &plant.a_star + &self.b_m * &self.theta_a_star;
        if (&lhs_a - &self.a_m).norm() > tol {
            return Err(Error::Config(format!(
                "matched structure violates A_m = A* + B_m Theta_A* (residual {:.3e})",
                (&lhs_a - &self.a_m).norm()
            )));
        }
        let lhs_b = &self.b_m * &self.theta_b_star;
        if (&lhs_b - &plant.b_star).norm() > tol {
            return Err(Error::Config(format!(
                "matched structure violates B* = B_m Theta_B* (residual {:.3e})",
                (&lhs_b - &plant.b_star).norm()
            )));
        }
        let rho = spectral_radius(&self.a_m);
        if rho >= 1.0 {
            return Err(Error::UnstableMatrix { rho });
        }
        if self.theta_b_star.clone().lu().try_inverse().is_none() {
            return Err(Error::SingularThetaB);
        }
        Ok(())
    }
}

/// Seeded, counter-tracked Gaussian noise source. Identical seed and stream
/// id always reproduce the identical sequence, independent of host or thread
/// schedule.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    stream: u64,
    rng: ChaCha12Rng,
    draws: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of scalar draws taken so far.
    pub fn counter(&self) -> u64 {
        self.draws
    }

    /// `n` i.i.d. N(0, sigma^2) draws.
    pub fn normal_vector(&mut self, n: usize, sigma: f64) -> DVector<f64> {
        debug_assert!(sigma >= 0.0);
        if sigma == 0.0 {
            // Still advance the counter so downstream draws stay aligned
            // across configurations that differ only in sigma.
            self.draws += n as u64;
            for _ in 0..n {
                let _: f64 = StandardNormal.sample(&mut self.rng);
            }
            return DVector::zeros(n);
        }
        self.draws += n as u64;
        DVector::from_iterator(
            n,
            (0..n).map(|_| sigma * StandardNormal.sample::<f64, _>(&mut self.rng)),
        )
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.draws += 1;
        self.rng.random_range(lo..hi)
    }
}

/// A fully instantiated benchmark system: plant, matched decomposition, the
/// gain used to build the initial reference model, and the factory-suggested
/// initial parameter estimate.
#[derive(Debug, Clone)]
pub struct SystemInstance {
    pub plant: PlantModel,
    pub matched: MatchedStructure,
    /// Known constant actuator offset controllers must feed forward
    /// (`Theta_B^{-1} gravity_bias` is added to every control input).
    pub gravity_bias: Option<DVector<f64>>,
    /// Gain embedded in the initial reference model `A_m0`.
    pub k0: DMatrix<f64>,
    /// Initial estimate `[Theta_A0, Theta_B0]`; `None` means "start from the
    /// center of the configured parameter set".
    pub theta0: Option<DMatrix<f64>>,
}

/// Initialization regime for the Laplacian benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplacianInit {
    /// Initial dynamics estimate perturbed entrywise away from the truth,
    /// resampled until the implied gain stabilizes the true plant.
    Stable { perturbation_scale: f64 },
    /// No useful prior: the initial estimate is the identity pair and the
    /// initial parameter estimate carries no feedback at all.
    Unstable,
}

/// Marginally unstable Laplacian chain, `A* = tridiag(0.01, 1.01, 0.01)`,
/// `B* = I_3`, with `B*` treated as completely known.
pub fn make_laplacian(
    init: LaplacianInit,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    sigma_w: f64,
    stream: &mut NoiseStream,
) -> Result<SystemInstance> {
    let a_star = DMatrix::from_row_slice(
        3,
        3,
        &[1.01, 0.01, 0.0, 0.01, 1.01, 0.01, 0.0, 0.01, 1.01],
    );
    let b_star = DMatrix::<f64>::identity(3, 3);
    let plant = PlantModel {
        a_star: a_star.clone(),
        b_star: b_star.clone(),
        sigma_w,
        input_bias: None,
    };

    let (a_hat0, theta0_known) = match init {
        LaplacianInit::Unstable => (DMatrix::<f64>::identity(3, 3), false),
        LaplacianInit::Stable { perturbation_scale } => {
            if !(0.0..=1.0).contains(&perturbation_scale) {
                return Err(Error::Config(format!(
                    "perturbation_scale must lie in [0, 1], got {perturbation_scale}"
                )));
            }
            let uncertainty = &a_star - DMatrix::<f64>::identity(3, 3);
            // Rejection-sample the entrywise perturbation until the implied
            // gain stabilizes the true plant.
            loop {
                let mut a_hat = DMatrix::<f64>::identity(3, 3);
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if perturbation_scale > 0.0 {
                            stream.uniform(-perturbation_scale, perturbation_scale)
                        } else {
                            0.0
                        };
                        a_hat[(i, j)] += (1.0 - delta) * uncertainty[(i, j)];
                    }
                }
                let k = dlqr(&a_hat, &b_star, q, r)?;
                if spectral_radius(&(&a_star + &b_star * &k)) < 1.0 {
                    break (a_hat, true);
                }
            }
        }
    };

    let k0 = dlqr(&a_hat0, &b_star, q, r)?;
    let a_m = &a_hat0 + &b_star * &k0;
    let b_m = b_star.clone();
    // B_m = I, so the matched parameters read off directly.
    let theta_a_star = &a_m - &a_star;
    let theta_b_star = DMatrix::<f64>::identity(3, 3);
    let matched = MatchedStructure {
        a_m,
        b_m,
        theta_a_star,
        theta_b_star,
    };
    matched.validate(&plant, 1e-10)?;

    let theta0 = if theta0_known {
        // Estimate consistent with (A_hat0, B_hat0): Theta_A0 = A_m - A_hat0 = K0.
        let mut t = DMatrix::zeros(3, 6);
        t.view_mut((0, 0), (3, 3)).copy_from(&k0);
        t.view_mut((0, 3), (3, 3))
            .copy_from(&DMatrix::<f64>::identity(3, 3));
        Some(t)
    } else {
        None
    };

    Ok(SystemInstance {
        plant,
        matched,
        gravity_bias: None,
        k0,
        theta0,
    })
}

/// Quadrotor physical constants.
pub mod quadrotor_constants {
    pub const G: f64 = 9.81;
    pub const MASS: f64 = 0.4;
    pub const ARM: f64 = 0.1143;
    pub const I_X: f64 = 2.09e-3;
    pub const I_Y: f64 = 2.09e-3;
    pub const I_Z: f64 = 4.18e-3;
    pub const YAW_COEFF: f64 = 0.01524;
}

/// Linearized 6-DOF quadrotor about hover, Euler-discretized with step `dt`,
/// with an unknown per-rotor loss of effectiveness `epsilon` in (0, 1].
///
/// State ordering: `[x, y, z, theta, phi, psi, v_x, v_y, v_z, q, p, r]`.
pub fn make_quadrotor(
    dt: f64,
    epsilon: &[f64],
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<SystemInstance> {
    use quadrotor_constants::*;
    if dt <= 0.0 {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if epsilon.len() != 4 {
        return Err(Error::InvalidLoe(format!(
            "expected 4 rotor factors, got {}",
            epsilon.len()
        )));
    }
    if epsilon.iter().any(|&e| e <= 0.0 || e > 1.0) {
        return Err(Error::InvalidLoe(format!(
            "rotor effectiveness must lie in (0, 1], got {epsilon:?}"
        )));
    }

    let n = 12;
    // Continuous-time kinematic couplings.
    let mut a_c = DMatrix::<f64>::zeros(n, n);
    a_c[(0, 6)] = 1.0; // x' = v_x
    a_c[(1, 7)] = 1.0; // y' = v_y
    a_c[(2, 8)] = 1.0; // z' = v_z
    a_c[(3, 9)] = 1.0; // theta' = q
    a_c[(4, 10)] = 1.0; // phi' = p
    a_c[(5, 11)] = 1.0; // psi' = r
    a_c[(6, 3)] = G; // v_x' = g theta
    a_c[(7, 4)] = -G; // v_y' = -g phi

    // Force/torque vector [F, tau_y, tau_x, tau_z] into accelerations.
    let mut b_c1 = DMatrix::<f64>::zeros(n, 4);
    b_c1[(8, 0)] = 1.0 / MASS;
    b_c1[(9, 1)] = 1.0 / I_Y;
    b_c1[(10, 2)] = 1.0 / I_X;
    b_c1[(11, 3)] = 1.0 / I_Z;

    // Rotor thrusts into force/torque.
    let b_c2 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 1.0, 1.0, 1.0, //
            ARM, 0.0, -ARM, 0.0, //
            0.0, ARM, 0.0, -ARM, //
            YAW_COEFF, -YAW_COEFF, YAW_COEFF, -YAW_COEFF,
        ],
    );

    let a = DMatrix::<f64>::identity(n, n) + dt * &a_c;
    let b_m = dt * &b_c1 * &b_c2;
    let theta_b_star = DMatrix::from_diagonal(&DVector::from_row_slice(epsilon));
    let b_star = &b_m * &theta_b_star;

    // Hover thrust per rotor; the plant subtracts Theta_B*^{-1} b_g inside
    // the input map so that the true dynamics read A x + B_m (Theta_B* u - b_g).
    let b_g = DVector::from_element(4, MASS * G / 4.0);
    let input_bias = DVector::from_iterator(4, epsilon.iter().map(|&e| MASS * G / (4.0 * e)));

    let plant = PlantModel {
        a_star: a.clone(),
        b_star,
        sigma_w: 0.0,
        input_bias: Some(input_bias),
    };

    let k0 = dlqr(&a, &b_m, q, r)?;
    let a_m = &a + &b_m * &k0;
    // A is known exactly here, so Theta_A* = K0 and the nominal estimate
    // assumes undamaged rotors (Theta_B0 = I).
    let matched = MatchedStructure {
        a_m,
        b_m,
        theta_a_star: k0.clone(),
        theta_b_star,
    };
    matched.validate(&plant, 1e-10)?;

    let mut theta0 = DMatrix::zeros(4, n + 4);
    theta0.view_mut((0, 0), (4, n)).copy_from(&k0);
    theta0
        .view_mut((0, n), (4, 4))
        .copy_from(&DMatrix::<f64>::identity(4, 4));

    Ok(SystemInstance {
        plant,
        matched,
        gravity_bias: Some(b_g),
        k0,
        theta0: Some(theta0),
    })
}

//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)) with
//! continuous dense output.

use crate::error::{Error, Result};

pub trait OdeRhs {
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> OdeRhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeStatus {
    Complete,
    /// The domain guard failed; integration stopped at the stored time.
    GuardStop { t: f64 },
}

struct DenseSeg {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    dense: Vec<DenseSeg>,
    pub status: OdeStatus,
    pub n_accepted: usize,
    pub n_rejected: usize,
    pub n_rhs: usize,
}

impl OdeSolution {
    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    fn segment(&self, t: f64) -> &DenseSeg {
        let idx = match self
            .ts
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.dense.len().saturating_sub(1)),
            Err(i) => i.saturating_sub(1).min(self.dense.len().saturating_sub(1)),
        };
        &self.dense[idx]
    }

    /// Dense-output state at time `t` (clamped to the covered interval).
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let seg = self.segment(t);
        let theta = ((t - seg.t0) / seg.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = seg.r[0][i]
                + theta
                    * (seg.r[1][i]
                        + th1 * (seg.r[2][i] + theta * (seg.r[3][i] + th1 * seg.r[4][i])));
        }
    }

    /// Dense-output state and time derivative at `t`.
    pub fn eval_with_derivative(&self, t: f64, out: &mut [f64], dout: &mut [f64]) {
        let seg = self.segment(t);
        let theta = ((t - seg.t0) / seg.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            let (r1, r2, r3, r4, r5) = (
                seg.r[0][i],
                seg.r[1][i],
                seg.r[2][i],
                seg.r[3][i],
                seg.r[4][i],
            );
            out[i] = r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
            // p(theta) = r1 + theta r2 + theta(1-theta) r3
            //          + theta^2 (1-theta) r4 + theta^2 (1-theta)^2 r5
            let dp = r2
                + (1.0 - 2.0 * theta) * r3
                + (2.0 * theta - 3.0 * theta * theta) * r4
                + (2.0 * theta - 6.0 * theta * theta + 4.0 * theta * theta * theta) * r5;
            dout[i] = dp / seg.h;
        }
    }

    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval(t, &mut out);
        out
    }
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate from `t0` to `t_end` (forward). The optional guard is
/// checked on every accepted state; when it returns false the
/// integration stops cleanly at the last valid time.
pub fn integrate(
    rhs: &dyn OdeRhs,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    guard: Option<&dyn Fn(&[f64]) -> bool>,
) -> Result<OdeSolution> {
    assert!(t_end > t0);
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    rhs.eval(t, &y, &mut k[0])?;
    let mut n_rhs = 1usize;
    let mut h = ((t_end - t0) * 1e-3).min(opts.h_max).max(1e-10);
    let mut sol = OdeSolution {
        ts: vec![t0],
        states: vec![y.clone()],
        dense: Vec::new(),
        status: OdeStatus::Complete,
        n_accepted: 0,
        n_rejected: 0,
        n_rhs: 0,
    };
    let mut y_stage = vec![0.0; dim];
    let mut y1 = vec![0.0; dim];
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Eval(format!(
                "integrator exceeded {} steps at t = {t:.6}",
                opts.max_steps
            )));
        }
        if h < 1e-14 * 1.0f64.max(t.abs()) {
            return Err(Error::StepSizeFloor { t });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        // A right-hand-side failure at a stage means the step probed
        // outside the domain of the system; shrink the step, and if it
        // cannot shrink further stop cleanly at the last good time.
        let mut stage_failed = false;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            match rhs.eval(t + C[s] * h, &y_stage, &mut k[s]) {
                Ok(()) => {}
                Err(_) => {
                    stage_failed = true;
                    break;
                }
            }
            n_rhs += 1;
        }
        if stage_failed {
            sol.n_rejected += 1;
            h *= 0.25;
            if h < 1e-12 * 1.0f64.max(t.abs()).max(t_end) {
                sol.status = OdeStatus::GuardStop { t };
                break;
            }
            continue;
        }
        // k[6] was evaluated at the 5th-order solution (FSAL).
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += A[6][j] * k[j][i];
            }
            y1[i] = y[i] + h * acc;
        }
        let mut err_acc = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err_acc += (e / sc) * (e / sc);
        }
        let err = (err_acc / dim as f64).sqrt();
        if err <= 1.0 {
            // accept
            let ydiff: Vec<f64> = (0..dim).map(|i| y1[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..dim).map(|i| h * k[0][i] - ydiff[i]).collect();
            let r = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                (0..dim)
                    .map(|i| ydiff[i] - h * k[6][i] - bspl[i])
                    .collect(),
                (0..dim)
                    .map(|i| {
                        h * (D[0] * k[0][i]
                            + D[2] * k[2][i]
                            + D[3] * k[3][i]
                            + D[4] * k[4][i]
                            + D[5] * k[5][i]
                            + D[6] * k[6][i])
                    })
                    .collect(),
            ];
            sol.dense.push(DenseSeg { t0: t, h, r });
            t += h;
            std::mem::swap(&mut y, &mut y1);
            sol.ts.push(t);
            sol.states.push(y.clone());
            sol.n_accepted += 1;
            if let Some(g) = guard {
                if !g(&y) {
                    sol.status = OdeStatus::GuardStop { t };
                    break;
                }
            }
            k.swap(0, 6); // FSAL
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).min(opts.h_max);
        } else {
            sol.n_rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    sol.n_rhs = n_rhs;
    Ok(sol)
}

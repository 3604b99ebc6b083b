//! Adaptive explicit Runge-Kutta integration of complex linear ODEs.
//!
//! Dormand-Prince 8(5,3) with the combined 5th/3rd-order error estimate and
//! standard step-size control. Observables are recorded on a caller-supplied
//! grid through the method's 7th-order continuous extension, so the grid
//! does not influence step selection.

use num_complex::Complex64 as C64;

use super::tableau::{A, A_EXTRA, B, C, C_EXTRA, D, E3, E5, EXTRA, STAGES};
use crate::error::{Error, Result};
use crate::linalg::ZERO;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(Error::param("tolerance", "rtol and atol must be > 0"));
        }
        Ok(Self { rtol, atol })
    }

    pub fn halved(self) -> Self {
        Self {
            rtol: self.rtol / 2.0,
            atol: self.atol / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl IntegrationStats {
    pub fn merge(&mut self, other: IntegrationStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

pub struct Integrator {
    pub tol: Tolerance,
    pub max_steps: usize,
}

impl Integrator {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            tol,
            max_steps: 20_000_000,
        }
    }

    fn rms(&self, x: &[C64], y_old: &[C64], y_new: &[C64]) -> f64 {
        let mut acc = 0.0;
        for ((e, a), b) in x.iter().zip(y_old).zip(y_new) {
            let scale = self.tol.atol + a.norm().max(b.norm()) * self.tol.rtol;
            acc += e.norm_sqr() / (scale * scale);
        }
        (acc / x.len() as f64).sqrt()
    }

    fn initial_step<F>(&self, rhs: &mut F, t: f64, y: &[C64], f0: &[C64], span: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let d0 = self.rms(y, y, y);
        let d1 = self.rms(f0, y, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        }
        .min(span);
        let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
        let mut f1 = vec![ZERO; y.len()];
        rhs(t + h0, &y1, &mut f1);
        let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
        let d2 = self.rms(&diff, y, y);
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t1` in place.
    ///
    /// `record` must be sorted and lie in `[t0, t1]`; `on_record` is called
    /// for each of them with the interpolated state. `on_step` sees every
    /// accepted step and may abort the integration.
    pub fn integrate<F, R, S>(
        &self,
        mut rhs: F,
        t0: f64,
        t1: f64,
        y: &mut [C64],
        record: &[f64],
        mut on_record: R,
        mut on_step: S,
    ) -> Result<IntegrationStats>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
        R: FnMut(f64, &[C64]),
        S: FnMut(f64, &[C64]) -> Result<()>,
    {
        let n = y.len();
        let mut stats = IntegrationStats::default();
        let mut next_record = 0;
        while next_record < record.len() && record[next_record] <= t0 {
            on_record(record[next_record], y);
            next_record += 1;
        }
        if t1 <= t0 {
            return Ok(stats);
        }

        let mut k: Vec<Vec<C64>> = vec![vec![ZERO; n]; STAGES + 1 + EXTRA];
        let mut dense: Vec<Vec<C64>> = vec![vec![ZERO; n]; 7];
        let mut f = vec![ZERO; n];
        let mut y_new = vec![ZERO; n];
        let mut y_stage = vec![ZERO; n];
        let mut err5 = vec![ZERO; n];
        let mut err3 = vec![ZERO; n];

        rhs(t0, y, &mut f);
        stats.rhs_evals += 1;
        let mut h_abs = self.initial_step(&mut rhs, t0, y, &f, t1 - t0);
        stats.rhs_evals += 1;
        let mut t = t0;

        while t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepUnderflow { t, h: h_abs });
            }
            let min_step = 10.0 * (next_up(t.abs()) - t.abs());
            let mut rejected = false;
            loop {
                if h_abs < min_step {
                    return Err(Error::StepUnderflow { t, h: h_abs });
                }
                let mut t_new = t + h_abs;
                if t_new > t1 {
                    t_new = t1;
                }
                let h = t_new - t;

                k[0].copy_from_slice(&f);
                for s in 1..STAGES {
                    for i in 0..n {
                        let mut acc = ZERO;
                        for (j, kj) in k.iter().enumerate().take(s) {
                            let a = A[s][j];
                            if a != 0.0 {
                                acc += kj[i] * a;
                            }
                        }
                        y_stage[i] = y[i] + acc * h;
                    }
                    let (head, tail) = k.split_at_mut(s);
                    let _ = head;
                    rhs(t + C[s] * h, &y_stage, &mut tail[0]);
                }
                for i in 0..n {
                    let mut acc = ZERO;
                    for (j, kj) in k.iter().enumerate().take(STAGES) {
                        if B[j] != 0.0 {
                            acc += kj[i] * B[j];
                        }
                    }
                    y_new[i] = y[i] + acc * h;
                }
                rhs(t_new, &y_new, &mut k[STAGES]);
                stats.rhs_evals += STAGES;

                for i in 0..n {
                    let mut e5 = ZERO;
                    let mut e3 = ZERO;
                    for (j, kj) in k.iter().enumerate().take(STAGES + 1) {
                        if E5[j] != 0.0 {
                            e5 += kj[i] * E5[j];
                        }
                        if E3[j] != 0.0 {
                            e3 += kj[i] * E3[j];
                        }
                    }
                    err5[i] = e5;
                    err3[i] = e3;
                }
                let mut n5 = 0.0;
                let mut n3 = 0.0;
                for i in 0..n {
                    let scale = self.tol.atol + y[i].norm().max(y_new[i].norm()) * self.tol.rtol;
                    n5 += err5[i].norm_sqr() / (scale * scale);
                    n3 += err3[i].norm_sqr() / (scale * scale);
                }
                let err = if n5 == 0.0 && n3 == 0.0 {
                    0.0
                } else {
                    h.abs() * n5 / ((n5 + 0.01 * n3) * n as f64).sqrt()
                };
                if !err.is_finite() || y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
                {
                    if y.iter().all(|v| v.re.is_finite() && v.im.is_finite()) && h_abs > min_step {
                        h_abs *= MIN_FACTOR;
                        rejected = true;
                        stats.rejected += 1;
                        continue;
                    }
                    return Err(Error::NonFinite { t });
                }

                if err < 1.0 {
                    let mut factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT))
                    };
                    if rejected {
                        factor = factor.min(1.0);
                    }
                    if next_record < record.len() && record[next_record] <= t_new {
                        build_dense(&mut rhs, t, h, y, &y_new, &mut k, &mut y_stage, &mut dense);
                        stats.rhs_evals += EXTRA;
                        while next_record < record.len() && record[next_record] <= t_new {
                            let tr = record[next_record];
                            eval_dense(&dense, y, (tr - t) / h, &mut y_stage);
                            on_record(tr, &y_stage);
                            next_record += 1;
                        }
                    }
                    let f_new = &k[STAGES];
                    f.copy_from_slice(f_new);
                    y.copy_from_slice(&y_new);
                    t = t_new;
                    h_abs *= factor;
                    stats.accepted += 1;
                    on_step(t, y)?;
                    break;
                }
                h_abs *= MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
                rejected = true;
                stats.rejected += 1;
            }
        }
        Ok(stats)
    }
}

/// Extra stages and interpolation polynomial for the step `[t, t + h]`.
#[allow(clippy::too_many_arguments)]
fn build_dense<F>(
    rhs: &mut F,
    t: f64,
    h: f64,
    y_old: &[C64],
    y_new: &[C64],
    k: &mut [Vec<C64>],
    scratch: &mut [C64],
    dense: &mut [Vec<C64>],
) where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y_old.len();
    for (e, (a, c)) in A_EXTRA.iter().zip(C_EXTRA).enumerate() {
        let s = STAGES + 1 + e;
        for i in 0..n {
            let mut acc = ZERO;
            for (j, kj) in k.iter().enumerate().take(s) {
                if a[j] != 0.0 {
                    acc += kj[i] * a[j];
                }
            }
            scratch[i] = y_old[i] + acc * h;
        }
        let (head, tail) = k.split_at_mut(s);
        let _ = head;
        rhs(t + c * h, scratch, &mut tail[0]);
    }
    for i in 0..n {
        let dy = y_new[i] - y_old[i];
        let f_old = k[0][i];
        let f_new = k[STAGES][i];
        dense[0][i] = dy;
        dense[1][i] = f_old * h - dy;
        dense[2][i] = dy * 2.0 - (f_new + f_old) * h;
        for (r, drow) in D.iter().enumerate() {
            let mut acc = ZERO;
            for (j, kj) in k.iter().enumerate() {
                if drow[j] != 0.0 {
                    acc += kj[i] * drow[j];
                }
            }
            dense[3 + r][i] = acc * h;
        }
    }
}

/// Evaluates the continuous extension at fraction `x` of the step.
fn eval_dense(dense: &[Vec<C64>], y_old: &[C64], x: f64, out: &mut [C64]) {
    out.iter_mut().for_each(|v| *v = ZERO);
    for (idx, f) in dense.iter().rev().enumerate() {
        let w = if idx % 2 == 0 { x } else { 1.0 - x };
        for (o, v) in out.iter_mut().zip(f) {
            *o = (*o + v) * w;
        }
    }
    for (o, y) in out.iter_mut().zip(y_old) {
        *o += y;
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    f64::from_bits(if x == 0.0 { 1 } else { x.to_bits() + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let integ = Integrator::new(Tolerance::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let record: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let mut seen = Vec::new();
        integ
            .integrate(
                |_, y, dy| dy[0] = -y[0] * 1.7,
                0.0,
                3.0,
                &mut y,
                &record,
                |t, y| seen.push((t, y[0])),
                |_, _| Ok(()),
            )
            .unwrap();
        assert!((y[0].re - (-1.7f64 * 3.0).exp()).abs() < 1e-11);
        assert_eq!(seen.len(), record.len());
        for (t, v) in seen {
            assert!((v.re - (-1.7 * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn oscillator_phase() {
        let integ = Integrator::new(Tolerance::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let w = 50.0;
        integ
            .integrate(
                |_, y, dy| dy[0] = C64::new(0.0, -w) * y[0],
                0.0,
                2.0,
                &mut y,
                &[],
                |_, _| {},
                |_, _| Ok(()),
            )
            .unwrap();
        let exact = C64::from_polar(1.0, -w * 2.0);
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn non_finite_aborts() {
        let integ = Integrator::new(Tolerance::default());
        let mut y = vec![C64::new(1.0, 0.0)];
        let r = integ.integrate(
            |_, _, dy| dy[0] = C64::new(f64::NAN, 0.0),
            0.0,
            1.0,
            &mut y,
            &[],
            |_, _| {},
            |_, _| Ok(()),
        );
        assert!(r.is_err());
    }
}

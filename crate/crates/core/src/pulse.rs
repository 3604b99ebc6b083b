//! Analytic pulse shapes and their counterdiabatic corrections.
//!
//! A single pulse centred at `t0` with duration `T` and width `w` has
//!
//! ```text
//! Omega0(t) = Omega_max * [exp(-(t - t0)^4 / w^4) - a] / (1 - a)
//! delta(t)  = delta0 * sin(pi (t - t0) / T)
//! ```
//!
//! on its support `|t - t0| <= T/2` and vanishes outside. The offset `a`
//! pins the amplitude to zero at the support edges. The counterdiabatic
//! drive is `(dOmega0 * delta - Omega0 * ddelta) / (Omega0^2 + delta^2)` and
//! enters as the imaginary part of the Rabi frequency.
//!
//! The double sequence places two such pulses at `-T/2` and `+T/2`, so it
//! spans `[-T, T]`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pulse of the analytic family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    /// Peak Rabi frequency, rad/us.
    pub omega_max: f64,
    /// Chirp amplitude, rad/us.
    pub delta0: f64,
    /// Pulse duration `T`, us.
    pub duration: f64,
    /// Pulse centre `t0`, us.
    pub center: f64,
    /// Width `w`, us.
    pub width: f64,
    /// Edge offset `a = exp(-(T/2)^4 / w^4)`.
    pub offset: f64,
    /// +1 or -1; multiplies the amplitude.
    pub sign: f64,
}

/// Counterdiabatic value at one instant. `degenerate` is set when both the
/// amplitude and the detuning vanish, where the drive is defined as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdSample {
    pub value: f64,
    pub degenerate: bool,
}

impl PulseParams {
    /// Pulse with the default width `w = T/4`.
    pub fn new(omega_max: f64, delta0: f64, duration: f64, center: f64) -> Result<Self> {
        Self::with_width(omega_max, delta0, duration, center, duration / 4.0)
    }

    pub fn with_width(
        omega_max: f64,
        delta0: f64,
        duration: f64,
        center: f64,
        width: f64,
    ) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::param("duration", format!("must be > 0, got {duration}")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param("width", format!("must be > 0, got {width}")));
        }
        if !(omega_max >= 0.0 && omega_max.is_finite()) {
            return Err(Error::param("omega_max", format!("must be >= 0, got {omega_max}")));
        }
        if !delta0.is_finite() || !center.is_finite() {
            return Err(Error::param("delta0", "must be finite"));
        }
        let half = duration / 2.0;
        let offset = (-(half / width).powi(4)).exp();
        if 1.0 - offset < 1e-12 {
            return Err(Error::param("width", "too wide for the pulse duration; profile vanishes"));
        }
        Ok(Self {
            omega_max,
            delta0,
            duration,
            center,
            width,
            offset,
            sign: 1.0,
        })
    }

    pub fn with_sign(mut self, sign: f64) -> Self {
        self.sign = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn start(&self) -> f64 {
        self.center - self.duration / 2.0
    }

    pub fn end(&self) -> f64 {
        self.center + self.duration / 2.0
    }

    #[inline]
    fn local(&self, t: f64) -> Option<f64> {
        let x = t - self.center;
        (x.abs() <= self.duration / 2.0).then_some(x)
    }

    /// Rabi amplitude `Omega0(t)`, zero outside the support.
    pub fn omega0(&self, t: f64) -> f64 {
        match self.local(t) {
            Some(x) => {
                let e = (-(x / self.width).powi(4)).exp();
                self.sign * self.omega_max * (e - self.offset) / (1.0 - self.offset)
            }
            None => 0.0,
        }
    }

    /// Exact time derivative of [`omega0`](Self::omega0).
    pub fn omega0_dot(&self, t: f64) -> f64 {
        match self.local(t) {
            Some(x) => {
                let w4 = self.width.powi(4);
                let e = (-x.powi(4) / w4).exp();
                self.sign * self.omega_max / (1.0 - self.offset) * e * (-4.0 * x.powi(3) / w4)
            }
            None => 0.0,
        }
    }

    pub fn delta(&self, t: f64) -> f64 {
        match self.local(t) {
            Some(x) => self.delta0 * (PI * x / self.duration).sin(),
            None => 0.0,
        }
    }

    pub fn delta_dot(&self, t: f64) -> f64 {
        match self.local(t) {
            Some(x) => self.delta0 * PI / self.duration * (PI * x / self.duration).cos(),
            None => 0.0,
        }
    }

    fn cd_with(&self, t: f64, amplitude_weight: f64) -> CdSample {
        let om = self.omega0(t);
        let dl = self.delta(t);
        let den = amplitude_weight * om * om + dl * dl;
        if den == 0.0 {
            return CdSample {
                value: 0.0,
                degenerate: self.local(t).is_some(),
            };
        }
        CdSample {
            value: (self.omega0_dot(t) * dl - om * self.delta_dot(t)) / den,
            degenerate: false,
        }
    }

    /// Counterdiabatic drive for a single atom, with degeneracy flag.
    pub fn cd_sample(&self, t: f64) -> CdSample {
        self.cd_with(t, 1.0)
    }

    /// Counterdiabatic drive for a single atom.
    pub fn cd_term(&self, t: f64) -> f64 {
        let s = self.cd_sample(t);
        if s.degenerate {
            log::warn!("counterdiabatic term degenerate at t = {t} us; using 0");
        }
        s.value
    }

    /// Counterdiabatic drive matched to the sqrt(2)-enhanced blockaded
    /// coupling. Analysis only; gate protocols drive with [`cd_term`](Self::cd_term).
    pub fn cd_term_blockade(&self, t: f64) -> f64 {
        self.cd_with(t, 2.0).value
    }

    /// `Omega0(t) + i Omega_CD(t)`.
    pub fn complex_rabi(&self, t: f64) -> C64 {
        C64::new(self.omega0(t), self.cd_term(t))
    }

    /// Adiabatic mixing angle, `tan(2 theta) = Omega0 / delta`.
    pub fn mixing_angle(&self, t: f64) -> f64 {
        0.5 * self.omega0(t).atan2(self.delta(t))
    }
}

/// Two identical (or sign-inverted) pulses centred at `-T/2` and `+T/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSequence {
    pub first: PulseParams,
    pub second: PulseParams,
}

impl DoubleSequence {
    pub fn new(omega_max: f64, delta0: f64, duration: f64, second_pulse_sign: f64) -> Result<Self> {
        if second_pulse_sign != 1.0 && second_pulse_sign != -1.0 {
            return Err(Error::param(
                "second_pulse_sign",
                format!("must be +1 or -1, got {second_pulse_sign}"),
            ));
        }
        let first = PulseParams::new(omega_max, delta0, duration, -duration / 2.0)?;
        let second = PulseParams::new(omega_max, delta0, duration, duration / 2.0)?
            .with_sign(second_pulse_sign);
        Ok(Self { first, second })
    }

    pub fn duration(&self) -> f64 {
        self.first.duration
    }

    /// Sequence clock span `[-T, T]`.
    pub fn span(&self) -> (f64, f64) {
        (self.first.start(), self.second.end())
    }

    /// The seam between the two pulses, where the detuning jumps.
    pub fn seam(&self) -> f64 {
        self.first.end()
    }

    /// Pulse active at `t`. Sequence boundaries and the seam belong to
    /// neither pulse; every profile is zero there.
    pub fn pulse_at(&self, t: f64) -> Option<&PulseParams> {
        let (lo, hi) = self.span();
        let seam = self.seam();
        if t > lo && t < seam {
            Some(&self.first)
        } else if t > seam && t < hi {
            Some(&self.second)
        } else {
            None
        }
    }

    pub fn omega0(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(0.0, |p| p.omega0(t))
    }

    pub fn omega0_dot(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(0.0, |p| p.omega0_dot(t))
    }

    pub fn delta(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(0.0, |p| p.delta(t))
    }

    pub fn delta_dot(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(0.0, |p| p.delta_dot(t))
    }

    pub fn cd_term(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(0.0, |p| p.cd_term(t))
    }

    pub fn cd_term_blockade(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(0.0, |p| p.cd_term_blockade(t))
    }

    pub fn complex_rabi(&self, t: f64) -> C64 {
        self.pulse_at(t).map_or(C64::new(0.0, 0.0), |p| p.complex_rabi(t))
    }

    /// Amplitude sign of the pulse active at `t` (+1 outside the support).
    pub fn sign_at(&self, t: f64) -> f64 {
        self.pulse_at(t).map_or(1.0, |p| p.sign)
    }
}

/// Convention for mapping the two-step drive back onto the effective
/// two-level coupling after eliminating the intermediate level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveSign {
    /// Effective coupling `+(Omega0 + i Omega_CD)`.
    #[default]
    Positive,
    /// Effective coupling `-(Omega0 + i Omega_CD)`.
    Negative,
}

/// Step Rabi frequency `Omega1 = Omega2 = sqrt(-2 Delta z)` for a target
/// effective drive `z`.
///
/// The branch is the principal one when `Re z >= 0` and `i sqrt(2 Delta z)`
/// when `amplitude_sign < 0`, which keeps the step drive continuous over a
/// sign-inverted pulse.
pub fn two_photon_step_amplitude(
    target: C64,
    intermediate_detuning: f64,
    amplitude_sign: f64,
    convention: EffectiveSign,
) -> Result<C64> {
    if !(intermediate_detuning < 0.0) {
        return Err(Error::param(
            "intermediate_detuning",
            format!("must be negative, got {intermediate_detuning}"),
        ));
    }
    let w = target * (-2.0 * intermediate_detuning);
    let root = if amplitude_sign < 0.0 {
        C64::i() * (-w).sqrt()
    } else {
        w.sqrt()
    };
    Ok(match convention {
        EffectiveSign::Positive => root,
        EffectiveSign::Negative => C64::i() * root,
    })
}

/// Double sequence realised with two identically shaped step pulses through a
/// detuned intermediate level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonPulseParams {
    pub base: DoubleSequence,
    /// Intermediate-level detuning `Delta`, rad/us, negative.
    pub intermediate_detuning: f64,
    pub convention: EffectiveSign,
}

impl TwoPhotonPulseParams {
    pub fn new(base: DoubleSequence, intermediate_detuning: f64) -> Result<Self> {
        if !(intermediate_detuning < 0.0) {
            return Err(Error::param(
                "intermediate_detuning",
                format!("must be negative, got {intermediate_detuning}"),
            ));
        }
        Ok(Self {
            base,
            intermediate_detuning,
            convention: EffectiveSign::Positive,
        })
    }

    /// Step Rabi frequency shared by both excitation steps.
    pub fn step_rabi(&self, t: f64) -> C64 {
        two_photon_step_amplitude(
            self.base.complex_rabi(t),
            self.intermediate_detuning,
            self.base.sign_at(t),
            self.convention,
        )
        .expect("detuning validated at construction")
    }

    /// Effective coupling `-Omega1 Omega2 / (2 Delta)` implied by the steps.
    pub fn effective_rabi(&self, t: f64) -> C64 {
        let s = self.step_rabi(t);
        -(s * s) / (2.0 * self.intermediate_detuning)
    }
}

/// Double sequence on a three-photon ladder with constant middle and upper
/// steps; the chirp is applied to the upper step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePhotonPulseParams {
    pub base: DoubleSequence,
    pub omega2: f64,
    pub omega3: f64,
}

impl ThreePhotonPulseParams {
    pub fn new(base: DoubleSequence, omega2: f64, omega3: f64) -> Result<Self> {
        if !(omega2 > 0.0) {
            return Err(Error::param("omega2", format!("must be > 0, got {omega2}")));
        }
        if !(omega3 > 0.0) {
            return Err(Error::param("omega3", format!("must be > 0, got {omega3}")));
        }
        Ok(Self { base, omega2, omega3 })
    }

    /// First-step drive `(Omega2 / Omega3) (Omega0 + i Omega_CD)`.
    pub fn first_step(&self, t: f64) -> C64 {
        self.base.complex_rabi(t) * (self.omega2 / self.omega3)
    }
}

/// Constant-amplitude first-step drive of length `2T` with a laser phase
/// jump at its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseJumpParams {
    /// First-step amplitude, rad/us.
    pub omega1_amp: f64,
    /// Static upper-step detuning, rad/us.
    pub delta: f64,
    /// Half of the gate time, us.
    pub half_time: f64,
    /// Phase jump, rad.
    pub delta_psi: f64,
    pub omega2: f64,
    pub omega3: f64,
}

impl PhaseJumpParams {
    pub fn new(
        omega1_amp: f64,
        delta: f64,
        half_time: f64,
        delta_psi: f64,
        omega2: f64,
        omega3: f64,
    ) -> Result<Self> {
        if !(half_time > 0.0 && half_time.is_finite()) {
            return Err(Error::param("half_time", format!("must be > 0, got {half_time}")));
        }
        if !(omega2 > 0.0) || !(omega3 > 0.0) {
            return Err(Error::param("omega2/omega3", "must be > 0"));
        }
        Ok(Self {
            omega1_amp,
            delta,
            half_time,
            delta_psi,
            omega2,
            omega3,
        })
    }

    pub fn span(&self) -> (f64, f64) {
        (0.0, 2.0 * self.half_time)
    }

    pub fn profile(&self, t: f64) -> C64 {
        let (lo, hi) = self.span();
        if t < lo || t > hi {
            C64::new(0.0, 0.0)
        } else if t < self.half_time {
            C64::new(self.omega1_amp, 0.0)
        } else {
            C64::from_polar(self.omega1_amp, self.delta_psi)
        }
    }

    /// Effective three-photon Rabi frequency `Omega1 Omega3 / Omega2`.
    pub fn effective_rabi(&self) -> f64 {
        self.omega1_amp * self.omega3 / self.omega2
    }
}

/// Sampled pulse profiles over the whole sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTable {
    pub t_us: Vec<f64>,
    pub omega0: Vec<f64>,
    pub omega_cd: Vec<f64>,
    pub delta: Vec<f64>,
}

impl PulseTable {
    /// Uniform samples over `[-T, T]`: `2 * points_per_pulse + 1` rows.
    pub fn sample(seq: &DoubleSequence, points_per_pulse: usize) -> Result<Self> {
        if points_per_pulse == 0 {
            return Err(Error::param("points_per_pulse", "empty time range"));
        }
        let (lo, hi) = seq.span();
        let n = 2 * points_per_pulse;
        let t_us: Vec<f64> = (0..=n)
            .map(|k| lo + (hi - lo) * k as f64 / n as f64)
            .collect();
        Ok(Self {
            omega0: t_us.iter().map(|&t| seq.omega0(t)).collect(),
            omega_cd: t_us.iter().map(|&t| seq.cd_term(t)).collect(),
            delta: t_us.iter().map(|&t| seq.delta(t)).collect(),
            t_us,
        })
    }

    pub fn len(&self) -> usize {
        self.t_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_us.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "omega0" => Some(&self.omega0),
            "omega_cd" => Some(&self.omega_cd),
            "delta" => Some(&self.delta),
            _ => None,
        }
    }

    /// Writes one two-column CSV `(t_us, value)` for the named curve.
    pub fn write_curve_csv<W: Write>(&self, name: &str, out: W) -> Result<()> {
        let col = self
            .column(name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_us", name])?;
        for (t, v) in self.t_us.iter().zip(col) {
            w.write_record([format!("{t:.12e}"), format!("{v:.12e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples a complex drive and enforces continuity of the square-root
/// branch between neighbouring samples.
pub fn sample_continuous<F: Fn(f64) -> C64>(times: &[f64], f: F) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::with_capacity(times.len());
    for &t in times {
        let v = f(t);
        let v = match out.last() {
            Some(prev) if (v - prev).norm() > (-v - prev).norm() => -v,
            _ => v,
        };
        out.push(v);
    }
    out
}

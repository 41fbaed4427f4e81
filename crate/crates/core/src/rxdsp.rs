//! Receiver front-end: channel selection, electronic dispersion compensation
//! or single-channel digital backpropagation, matched filtering down to one
//! sample per symbol, and pilot-aided carrier phase recovery.
//!
//! Frame timing is known from the simulation (ideal synchronization, ideal
//! local oscillators); all spectral operations act on the cyclic record, so
//! delay bookkeeping is exact integer sample arithmetic.

use crate::fiber::{split_step, LinkConfig, StepParams};
use crate::txwave::{frequency_shift, resample, rrc_taps};
use crate::util::{bin_frequency, fft_in_place, ifft_in_place, SPEED_OF_LIGHT};
use crate::waveform::DualPolWaveform;
use crate::{Error, Result};
use num_complex::Complex64;

/// Dispersion compensation mode of the front-end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CompensationMode {
    Edc,
    Dbp,
}

/// Front-end configuration.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RxConfig {
    pub mode: CompensationMode,
    /// Backpropagation resolution; clamped to the forward grid.
    pub dbp_steps_per_span: usize,
    /// Samples per symbol for the per-channel processing rate.
    pub processing_sps: usize,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            mode: CompensationMode::Dbp,
            dbp_steps_per_span: 4,
            processing_sps: 2,
        }
    }
}

/// Symbol-rate stream after the front-end, with pilot bookkeeping.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    pub symbols_x: Vec<Complex64>,
    pub symbols_y: Vec<Complex64>,
    pub pilot_positions: Vec<usize>,
    pub pilots_x: Vec<Complex64>,
    pub pilots_y: Vec<Complex64>,
    /// Phase removed per symbol by CPR (x then y), radians.
    pub estimated_phase_x: Vec<f64>,
    pub estimated_phase_y: Vec<f64>,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.symbols_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols_x.is_empty()
    }

    pub fn payload_positions(&self) -> Vec<usize> {
        let mut pilot = vec![false; self.len()];
        for &p in &self.pilot_positions {
            pilot[p] = true;
        }
        (0..self.len()).filter(|&i| !pilot[i]).collect()
    }
}

/// Downconverts `offset` Hz to baseband, brickwall-filters to `bandwidth`
/// and resamples to `target_rate`.
pub fn channel_select(
    field: &DualPolWaveform,
    offset: f64,
    bandwidth: f64,
    target_rate: f64,
) -> Result<DualPolWaveform> {
    if offset.abs() + bandwidth / 2.0 > field.sample_rate / 2.0 {
        return Err(Error::Waveform(format!(
            "selection band {:.3e} +- {:.3e} Hz exceeds Nyquist",
            offset,
            bandwidth / 2.0
        )));
    }
    if bandwidth > target_rate {
        return Err(Error::Waveform(
            "channel bandwidth exceeds the processing rate".into(),
        ));
    }
    let mut shifted = frequency_shift(field, -offset);
    shifted.center_frequency_offset = 0.0;
    let n = shifted.len();
    for pol in [&mut shifted.samples_x, &mut shifted.samples_y] {
        fft_in_place(pol);
        for (k, v) in pol.iter_mut().enumerate() {
            if bin_frequency(k, n, field.sample_rate).abs() > bandwidth / 2.0 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        ifft_in_place(pol);
    }
    resample(&shifted, target_rate)
}

/// Frequency-domain compensation of `total_dispersion` ps/nm: the exact
/// inverse of the link's linear phase.
pub fn edc(
    field: &DualPolWaveform,
    total_dispersion_ps_nm: f64,
    reference_wavelength_nm: f64,
) -> DualPolWaveform {
    let lambda = reference_wavelength_nm * 1e-9;
    // beta2 * z in s^2 for the accumulated dispersion
    let beta2_z =
        -(total_dispersion_ps_nm * 1e-3) * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT);
    let n = field.len();
    let mut out = field.clone();
    for pol in [&mut out.samples_x, &mut out.samples_y] {
        fft_in_place(pol);
        for (k, v) in pol.iter_mut().enumerate() {
            let f = bin_frequency(k, n, field.sample_rate);
            let phase = -2.0 * std::f64::consts::PI * std::f64::consts::PI * beta2_z * f * f;
            *v *= Complex64::from_polar(1.0, phase);
        }
        ifft_in_place(pol);
    }
    out
}

/// Single-channel digital backpropagation: spans undone in reverse order,
/// amplifier gain divided out, split-step with negated parameters. Step
/// boundaries within a span are spaced for equal effective nonlinear length,
/// which puts fine steps where the forward power was high.
pub fn dbp(
    field: &DualPolWaveform,
    link: &LinkConfig,
    steps_per_span: usize,
) -> Result<DualPolWaveform> {
    if steps_per_span == 0 {
        return Err(Error::Config("dbp needs at least 1 step per span".into()));
    }
    link.fiber.validate()?;
    let forward = StepParams::forward(&link.fiber);
    let steps_per_span = steps_per_span.min(forward.n_steps);
    let span_m = link.fiber.span_length_km * 1000.0;
    let alpha = link.fiber.alpha_per_m();
    // forward positions 0 = launch .. span_m; equal-effective-length split
    let boundaries: Vec<f64> = (0..=steps_per_span)
        .map(|k| {
            let frac = k as f64 / steps_per_span as f64;
            if alpha * span_m < 1e-9 {
                frac * span_m
            } else {
                let leff_total = 1.0 - (-alpha * span_m).exp();
                -(1.0 - frac * leff_total).ln() / alpha
            }
        })
        .collect();
    let gain_inv = 10f64.powf(-link.amp.gain_db / 20.0);
    let mut current = field.clone();
    for _span in 0..link.n_spans {
        current.scale(gain_inv);
        // walk the span backward: segment [z_{k}, z_{k+1}] for k from the
        // last to the first
        for k in (0..steps_per_span).rev() {
            let dz = boundaries[k + 1] - boundaries[k];
            let params = StepParams {
                alpha_per_m: -alpha,
                beta2: -forward.beta2,
                gamma_per_w_m: -forward.gamma_per_w_m,
                step_m: dz,
                n_steps: 1,
            };
            current = split_step(&current, &params)?;
        }
    }
    Ok(current)
}

/// Matched RRC filter (cyclic) followed by decimation at symbol centers.
/// The record must contain `n_symbols + span` symbol slots at `sps` samples
/// per symbol; the combined TX + matched filter delay of `span * sps`
/// samples is removed exactly.
pub fn matched_filter_decimate(
    field: &DualPolWaveform,
    rolloff: f64,
    sps: usize,
    span_symbols: usize,
    n_symbols: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n = field.len();
    if n != (n_symbols + span_symbols) * sps {
        return Err(Error::Dimension(format!(
            "record length {n} != ({n_symbols} + {span_symbols}) * {sps}"
        )));
    }
    let taps = rrc_taps(sps, rolloff, span_symbols);
    let mut h = vec![Complex64::new(0.0, 0.0); n];
    for (i, &t) in taps.iter().enumerate() {
        h[i] = Complex64::new(t, 0.0);
    }
    fft_in_place(&mut h);
    let delay = span_symbols * sps; // TX shaping delay + matched filter delay
    let mf_one = |samples: &[Complex64]| -> Vec<Complex64> {
        let mut spec = samples.to_vec();
        fft_in_place(&mut spec);
        for (v, hh) in spec.iter_mut().zip(&h) {
            *v *= hh;
        }
        ifft_in_place(&mut spec);
        (0..n_symbols)
            .map(|k| spec[(k * sps + delay) % n] / (sps as f64).sqrt())
            .collect()
    };
    Ok((mf_one(&field.samples_x), mf_one(&field.samples_y)))
}

/// Pilot-aided carrier phase recovery: per-pilot phase error, moving average
/// over `window` pilots, linear interpolation in between, rotation removed.
/// Phases are unwrapped before smoothing so slow drifts track through +-pi.
pub fn pilot_cpr(stream: &SymbolStream, window: usize) -> SymbolStream {
    let window = window.max(1);
    let mut out = stream.clone();
    if stream.pilot_positions.is_empty() {
        return out;
    }
    for (symbols, pilots, phases) in [
        (
            &mut out.symbols_x,
            &stream.pilots_x,
            &mut out.estimated_phase_x,
        ),
        (
            &mut out.symbols_y,
            &stream.pilots_y,
            &mut out.estimated_phase_y,
        ),
    ] {
        // raw per-pilot phase, unwrapped
        let mut raw: Vec<f64> = stream
            .pilot_positions
            .iter()
            .zip(pilots)
            .map(|(&pos, p)| (symbols[pos] * p.conj()).arg())
            .collect();
        for i in 1..raw.len() {
            let mut d = raw[i] - raw[i - 1];
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            raw[i] = raw[i - 1] + d;
        }
        // centered moving average over `window` pilots
        let smooth: Vec<f64> = (0..raw.len())
            .map(|i| {
                let lo = i.saturating_sub(window / 2);
                let hi = (i + window / 2 + 1).min(raw.len());
                raw[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        // linear interpolation between pilot positions
        let positions = &stream.pilot_positions;
        let mut phase = vec![0.0f64; symbols.len()];
        for i in 0..symbols.len() {
            let p = match positions.binary_search(&i) {
                Ok(k) => smooth[k],
                Err(k) => {
                    if k == 0 {
                        smooth[0]
                    } else if k == positions.len() {
                        smooth[positions.len() - 1]
                    } else {
                        let (i0, i1) = (positions[k - 1], positions[k]);
                        let t = (i - i0) as f64 / (i1 - i0) as f64;
                        smooth[k - 1] * (1.0 - t) + smooth[k] * t
                    }
                }
            };
            phase[i] = p;
            symbols[i] *= Complex64::from_polar(1.0, -p);
        }
        *phases = phase;
    }
    out
}

/// Scales both polarizations by the real least-squares gain fitted on the
/// pilots after CPR, so the stream is calibrated to the unit-power grid.
pub fn pilot_gain_normalize(stream: &mut SymbolStream) {
    for (symbols, pilots) in [
        (&mut stream.symbols_x, &stream.pilots_x),
        (&mut stream.symbols_y, &stream.pilots_y),
    ] {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&pos, p) in stream.pilot_positions.iter().zip(pilots) {
            num += (symbols[pos] * p.conj()).re;
            den += p.norm_sqr();
        }
        if den > 0.0 && num > 0.0 {
            let g = num / den;
            for v in symbols.iter_mut() {
                *v /= g;
            }
        }
    }
}

//! Transmit-side symbol framing and waveform synthesis: per-block symbol
//! interleaving, uniform pilot insertion, root-raised-cosine pulse shaping
//! and WDM multiplexing.

use crate::waveform::DualPolWaveform;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use std::f64::consts::PI;

/// Seeded uniform permutation of `0..len`.
pub fn permutation(len: usize, seed: u64) -> Vec<u32> {
    let mut p: Vec<u32> = (0..len as u32).collect();
    let mut rng = crate::util::seeded_rng(seed, "symbol-interleaver", len as u64);
    p.shuffle(&mut rng);
    p
}

/// Applies the seeded per-block permutation: out[i] = input[perm[i]].
pub fn interleave<T: Clone>(symbols: &[T], seed: u64) -> Vec<T> {
    let perm = permutation(symbols.len(), seed);
    perm.iter().map(|&i| symbols[i as usize].clone()).collect()
}

/// Exact inverse of [`interleave`] for the same seed.
pub fn deinterleave<T: Clone + Default>(symbols: &[T], seed: u64) -> Vec<T> {
    let perm = permutation(symbols.len(), seed);
    let mut out = vec![T::default(); symbols.len()];
    for (i, &p) in perm.iter().enumerate() {
        out[p as usize] = symbols[i].clone();
    }
    out
}

/// Payload symbols multiplexed with uniformly spaced known pilots.
/// Both polarizations share pilot positions; pilot values are independent.
#[derive(Debug, Clone)]
pub struct SymbolFrame {
    pub stream_x: Vec<Complex64>,
    pub stream_y: Vec<Complex64>,
    pub pilot_positions: Vec<usize>,
    pub pilots_x: Vec<Complex64>,
    pub pilots_y: Vec<Complex64>,
    /// Every `spacing`-th stream slot is a pilot.
    pub spacing: usize,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.stream_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream_x.is_empty()
    }

    pub fn payload_len(&self) -> usize {
        self.len() - self.pilot_positions.len()
    }

    /// Indices of payload slots in stream order.
    pub fn payload_positions(&self) -> Vec<usize> {
        let mut pilot = vec![false; self.len()];
        for &p in &self.pilot_positions {
            pilot[p] = true;
        }
        (0..self.len()).filter(|&i| !pilot[i]).collect()
    }
}

/// Multiplexes pilots into the payload streams at rate `rate` (a pilot every
/// floor(1/rate) slots, starting at slot 0). Pilots are seeded QPSK at unit
/// power, matching the unit-power payload constellation.
pub fn insert_pilots(
    payload_x: &[Complex64],
    payload_y: &[Complex64],
    rate: f64,
    pilot_seed: u64,
) -> Result<SymbolFrame> {
    if payload_x.len() != payload_y.len() {
        return Err(Error::Dimension("payload length mismatch".into()));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Config(format!("pilot rate {rate} outside (0, 1)")));
    }
    let spacing = (1.0 / rate).floor() as usize;
    let mut rng = crate::util::seeded_rng(pilot_seed, "pilots", 0);
    let mut qpsk = move || {
        let s = 1.0 / 2f64.sqrt();
        Complex64::new(
            if rng.gen::<bool>() { s } else { -s },
            if rng.gen::<bool>() { s } else { -s },
        )
    };
    let mut stream_x = Vec::new();
    let mut stream_y = Vec::new();
    let mut pilot_positions = Vec::new();
    let mut pilots_x = Vec::new();
    let mut pilots_y = Vec::new();
    let mut consumed = 0usize;
    while consumed < payload_x.len() {
        if stream_x.len() % spacing == 0 {
            let (px, py) = (qpsk(), qpsk());
            pilot_positions.push(stream_x.len());
            pilots_x.push(px);
            pilots_y.push(py);
            stream_x.push(px);
            stream_y.push(py);
        } else {
            stream_x.push(payload_x[consumed]);
            stream_y.push(payload_y[consumed]);
            consumed += 1;
        }
    }
    Ok(SymbolFrame {
        stream_x,
        stream_y,
        pilot_positions,
        pilots_x,
        pilots_y,
        spacing,
    })
}

/// Strips pilots back out of a frame.
pub fn remove_pilots(frame: &SymbolFrame) -> (Vec<Complex64>, Vec<Complex64>) {
    let pos = frame.payload_positions();
    (
        pos.iter().map(|&i| frame.stream_x[i]).collect(),
        pos.iter().map(|&i| frame.stream_y[i]).collect(),
    )
}

/// Default shaping-filter span in symbols. Small roll-offs decay like 1/t,
/// so a long span is needed for the matched pair to stay Nyquist below 1e-3.
pub const DEFAULT_RRC_SPAN: usize = 256;

/// Unit-energy root-raised-cosine taps spanning `span_symbols` symbols at
/// `sps` samples per symbol (length span*sps + 1, symmetric), under a mild
/// Kaiser window that controls the truncation sidelobes.
pub fn rrc_taps(sps: usize, rolloff: f64, span_symbols: usize) -> Vec<f64> {
    let n = span_symbols * sps + 1;
    let mid = (n - 1) as f64 / 2.0;
    let beta = rolloff;
    let window = kaiser_window(n, 2.0);
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - mid) / sps as f64; // in symbol periods
            let h = if t.abs() < 1e-9 {
                1.0 + beta * (4.0 / PI - 1.0)
            } else if beta > 0.0 && (t.abs() - 1.0 / (4.0 * beta)).abs() < 1e-9 {
                (beta / 2f64.sqrt())
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos())
            } else {
                let num = (PI * t * (1.0 - beta)).sin()
                    + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
                let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
                num / den
            };
            h * window[i]
        })
        .collect();
    let energy: f64 = taps.iter().map(|&h| h * h).sum();
    let scale = 1.0 / energy.sqrt();
    for h in taps.iter_mut() {
        *h *= scale;
    }
    taps
}

fn kaiser_window(n: usize, beta: f64) -> Vec<f64> {
    fn i0(x: f64) -> f64 {
        let mut sum = 1.0;
        let mut term = 1.0;
        for k in 1..30 {
            term *= (x / (2.0 * k as f64)).powi(2);
            sum += term;
        }
        sum
    }
    (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
            i0(beta * (1.0 - r * r).sqrt()) / i0(beta)
        })
        .collect()
}

/// Upsamples by `sps` and applies the RRC filter (linear convolution).
/// Output length is sps * symbols + span * sps; the symbol k center sits at
/// sample k*sps + span*sps/2.
pub fn pulse_shape(
    frame: &SymbolFrame,
    sps: usize,
    rolloff: f64,
    span_symbols: usize,
    symbol_rate: f64,
) -> Result<DualPolWaveform> {
    if sps < 2 {
        return Err(Error::Config(format!("sps {sps} must be at least 2")));
    }
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::Config(format!("roll-off {rolloff} outside (0, 1]")));
    }
    let taps = rrc_taps(sps, rolloff, span_symbols);
    let filter_one = |symbols: &[Complex64]| -> Vec<Complex64> {
        let out_len = symbols.len() * sps + span_symbols * sps;
        let mut out = vec![Complex64::new(0.0, 0.0); out_len];
        for (k, &s) in symbols.iter().enumerate() {
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            let base = k * sps;
            for (i, &h) in taps.iter().enumerate() {
                out[base + i] += s * h;
            }
        }
        out
    };
    let x = filter_one(&frame.stream_x);
    let y = filter_one(&frame.stream_y);
    // Scale so the waveform's mean power equals the symbol power: unit-energy
    // taps spread each symbol over sps samples.
    let mut wf = DualPolWaveform::new(x, y, sps as f64 * symbol_rate)?;
    wf.scale((sps as f64).sqrt());
    Ok(wf)
}

/// Group delay of the shaping filter in samples.
pub fn pulse_shape_delay(sps: usize, span_symbols: usize) -> usize {
    span_symbols * sps / 2
}

/// Frequency-shifts a waveform by (approximately) `offset` Hz using exact
/// FFT-bin rotation on the cyclic record; the offset actually applied is the
/// nearest bin and is recorded in `center_frequency_offset`.
pub fn frequency_shift(wf: &DualPolWaveform, offset: f64) -> DualPolWaveform {
    let n = wf.len();
    let bin = (offset * n as f64 / wf.sample_rate).round();
    let shift = bin as i64;
    let rotate = |samples: &[Complex64]| -> Vec<Complex64> {
        let mut spec = samples.to_vec();
        crate::util::fft_in_place(&mut spec);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, v) in spec.into_iter().enumerate() {
            let dst = (k as i64 + shift).rem_euclid(n as i64) as usize;
            out[dst] = v;
        }
        crate::util::ifft_in_place(&mut out);
        out
    };
    let mut out = DualPolWaveform {
        samples_x: rotate(&wf.samples_x),
        samples_y: rotate(&wf.samples_y),
        sample_rate: wf.sample_rate,
        center_frequency_offset: wf.center_frequency_offset + bin * wf.sample_rate / n as f64,
    };
    if out.center_frequency_offset.abs() < 1e-6 {
        out.center_frequency_offset = 0.0;
    }
    out
}

/// Multiplexes an odd number of equal-rate channels onto the WDM grid.
/// Channel i is shifted to (i - center) * grid_spacing and scaled to
/// `per_channel_power` (waveform power units); the aggregate field is
/// returned at the common sample rate.
pub fn wdm_mux(
    channels: &[DualPolWaveform],
    grid_spacing: f64,
    per_channel_power: f64,
    occupied_bandwidth: f64,
) -> Result<DualPolWaveform> {
    if channels.is_empty() || channels.len() % 2 == 0 {
        return Err(Error::Config(format!(
            "WDM channel count {} must be odd",
            channels.len()
        )));
    }
    let n = channels[0].len();
    let rate = channels[0].sample_rate;
    for c in channels {
        if c.len() != n || (c.sample_rate - rate).abs() > 1e-3 {
            return Err(Error::Dimension(
                "WDM channels must share record length and sample rate".into(),
            ));
        }
    }
    let center = channels.len() / 2;
    let max_edge = grid_spacing * center as f64 + occupied_bandwidth / 2.0;
    if 2.0 * max_edge > rate {
        return Err(Error::Waveform(format!(
            "band edge {:.3e} Hz exceeds Nyquist {:.3e} Hz",
            max_edge,
            rate / 2.0
        )));
    }
    let mut agg = DualPolWaveform::zeros(n, rate);
    for (i, ch) in channels.iter().enumerate() {
        let mut c = ch.clone();
        let p = c.mean_power();
        if p <= 0.0 {
            return Err(Error::Waveform("channel with zero power".into()));
        }
        c.scale((per_channel_power / p).sqrt());
        let shifted = frequency_shift(&c, (i as f64 - center as f64) * grid_spacing);
        for (a, b) in agg.samples_x.iter_mut().zip(&shifted.samples_x) {
            *a += b;
        }
        for (a, b) in agg.samples_y.iter_mut().zip(&shifted.samples_y) {
            *a += b;
        }
    }
    Ok(agg)
}

/// Band-limited resampling on the cyclic record by spectrum truncation or
/// zero-padding. The new length n * new_rate / old_rate must be an integer.
pub fn resample(wf: &DualPolWaveform, new_rate: f64) -> Result<DualPolWaveform> {
    let n = wf.len();
    let exact = n as f64 * new_rate / wf.sample_rate;
    let new_n = exact.round() as usize;
    if (exact - new_n as f64).abs() > 1e-6 {
        return Err(Error::Waveform(format!(
            "resampling {} -> {} Hz needs integer record length, got {exact}",
            wf.sample_rate, new_rate
        )));
    }
    if new_n == n {
        return Ok(wf.clone());
    }
    let convert = |samples: &[Complex64]| -> Vec<Complex64> {
        let mut spec = samples.to_vec();
        crate::util::fft_in_place(&mut spec);
        let keep = n.min(new_n);
        let half = keep / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); new_n];
        let scale = new_n as f64 / n as f64;
        for k in 0..=half {
            if k < out.len() {
                out[k] = spec[k] * scale;
            }
        }
        for k in 1..keep - half {
            out[new_n - k] = spec[n - k] * scale;
        }
        crate::util::ifft_in_place(&mut out);
        out
    };
    Ok(DualPolWaveform {
        samples_x: convert(&wf.samples_x),
        samples_y: convert(&wf.samples_y),
        sample_rate: new_rate,
        center_frequency_offset: wf.center_frequency_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::mean_power;

    fn tones(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).cos(), (i as f64 * 0.61).sin()))
            .collect()
    }

    #[test]
    fn interleaver_round_trip_and_measure_preserving() {
        let x = tones(257);
        let il = interleave(&x, 42);
        assert_eq!(deinterleave(&il, 42), x);
        let mut a: Vec<(u64, u64)> = x.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
        let mut b: Vec<(u64, u64)> = il.iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b, "permutation preserves the multiset");
        assert_eq!(interleave(&tones(1), 9), tones(1));
    }

    #[test]
    fn pilot_spacing_and_count() {
        let x = tones(1900);
        let frame = insert_pilots(&x, &x, 0.05, 7).unwrap();
        assert_eq!(frame.pilot_positions.len(), 100);
        assert_eq!(frame.len(), 2000);
        assert_eq!(frame.spacing, 20);
        for w in frame.pilot_positions.windows(2) {
            assert_eq!(w[1] - w[0], 20);
        }
        let (bx, by) = remove_pilots(&frame);
        assert_eq!(bx, x);
        assert_eq!(by, x);
    }

    #[test]
    fn pilot_rate_half_alternates() {
        let x = tones(5);
        let frame = insert_pilots(&x, &x, 0.5, 1).unwrap();
        assert_eq!(frame.len(), 10);
        assert_eq!(frame.pilot_positions, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn rrc_impulse_response_and_peak() {
        let taps = rrc_taps(16, 0.01, 64);
        let n = taps.len();
        assert_eq!(n, 64 * 16 + 1);
        let peak = taps.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(taps[(n - 1) / 2], peak, "peak at center");
        let frame = SymbolFrame {
            stream_x: vec![Complex64::new(1.0, 0.0)],
            stream_y: vec![Complex64::new(0.0, 0.0)],
            pilot_positions: vec![],
            pilots_x: vec![],
            pilots_y: vec![],
            spacing: 20,
        };
        let wf = pulse_shape(&frame, 16, 0.01, 64, 32e9).unwrap();
        assert_eq!(wf.len(), 16 + 64 * 16);
        // output equals the (scaled) impulse response
        let scale = 16f64.sqrt();
        for (i, &h) in taps.iter().enumerate() {
            assert!((wf.samples_x[i].re - h * scale).abs() < 1e-12);
        }
    }

    #[test]
    fn rrc_cascade_is_nyquist() {
        // Numeric convolution oracle: RRC * RRC sampled at symbol centers is
        // ISI-free.
        let sps = 8;
        let taps = rrc_taps(sps, 0.01, DEFAULT_RRC_SPAN);
        let n = taps.len();
        let mut cascade = vec![0.0f64; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                cascade[i + j] += taps[i] * taps[j];
            }
        }
        let center = n - 1;
        let peak = cascade[center];
        assert!(peak > 0.9, "cascade center {peak}");
        let mut worst: f64 = 0.0;
        let mut k = 1;
        while center + k * sps < cascade.len() {
            worst = worst.max(cascade[center + k * sps].abs() / peak);
            worst = worst.max(cascade[center - k * sps].abs() / peak);
            k += 1;
        }
        assert!(worst < 1e-3, "worst ISI tap ratio {worst}");
    }

    #[test]
    fn mux_single_channel_is_identity_up_to_power() {
        let x = tones(4800);
        let frame = insert_pilots(&x, &x, 0.05, 3).unwrap();
        let wf = pulse_shape(&frame, 8, 0.01, 32, 32e9).unwrap();
        let agg = wdm_mux(&[wf.clone()], 37.5e9, 2e-3, 32.5e9).unwrap();
        let scale = (2e-3 / wf.mean_power()).sqrt();
        for (a, b) in agg.samples_x.iter().zip(&wf.samples_x) {
            assert!((a - b * scale).norm() < 1e-9);
        }
    }

    #[test]
    fn mux_places_spectral_peaks_on_the_grid() {
        // 3 channels at 37.5 GHz spacing: periodogram peaks at -37.5, 0, +37.5.
        let mk = |seed: u64| {
            let mut rng = crate::util::seeded_rng(seed, "wdm-test", 0);
            let syms: Vec<Complex64> = (0..2400)
                .map(|_| {
                    let s = 1.0 / 2f64.sqrt();
                    Complex64::new(
                        if rng.gen::<bool>() { s } else { -s },
                        if rng.gen::<bool>() { s } else { -s },
                    )
                })
                .collect();
            let frame = insert_pilots(&syms, &syms, 0.05, seed).unwrap();
            pulse_shape(&frame, 8, 0.01, 32, 32e9).unwrap()
        };
        let chans: Vec<_> = (0..3).map(|i| mk(100 + i)).collect();
        let agg = wdm_mux(&chans, 37.5e9, 1e-3, 32.5e9).unwrap();
        let mut spec = agg.samples_x.clone();
        crate::util::fft_in_place(&mut spec);
        let n = spec.len();
        let fs = agg.sample_rate;
        // integrate power in 5 GHz windows around each expected peak and at
        // a gap frequency
        let band_power = |f0: f64| -> f64 {
            spec.iter()
                .enumerate()
                .filter(|(k, _)| {
                    let f = crate::util::bin_frequency(*k, n, fs);
                    (f - f0).abs() < 2.5e9
                })
                .map(|(_, v)| v.norm_sqr())
                .sum()
        };
        let p_center = band_power(0.0);
        let p_left = band_power(-37.5e9);
        let p_right = band_power(37.5e9);
        let p_gap = band_power(72.0e9);
        assert!(p_left > 100.0 * p_gap);
        assert!(p_center > 100.0 * p_gap);
        assert!(p_right > 100.0 * p_gap);
    }

    #[test]
    fn mux_total_power_adds() {
        let mk = |seed: u64| {
            let mut rng = crate::util::seeded_rng(seed, "wdm-pow", 0);
            let syms: Vec<Complex64> = (0..2400)
                .map(|_| {
                    Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * 2.0
                })
                .collect();
            let frame = insert_pilots(&syms, &syms, 0.05, seed).unwrap();
            pulse_shape(&frame, 8, 0.01, 32, 32e9).unwrap()
        };
        let chans: Vec<_> = (0..3).map(|i| mk(200 + i)).collect();
        let p = 1.5e-3;
        let agg = wdm_mux(&chans, 37.5e9, p, 32.5e9).unwrap();
        let total = agg.mean_power();
        let expected = 3.0 * p;
        let db = 10.0 * (total / expected).log10();
        assert!(db.abs() < 0.01, "total power off by {db} dB");
    }

    #[test]
    fn mux_rejects_aliasing(){
        let x = tones(2400);
        let frame = insert_pilots(&x, &x, 0.05, 3).unwrap();
        let chans: Vec<_> = (0..5).map(|_| pulse_shape(&frame, 8, 0.01, 32, 32e9).unwrap()).collect();
        // 5 channels at 64 GHz spacing: edge = 2*64 + 16 GHz > 128 GHz Nyquist
        assert!(wdm_mux(&chans, 64e9, 1e-3, 32.5e9).is_err());
    }

    #[test]
    fn frequency_shift_then_back_is_identity() {
        let x = tones(3000);
        let frame = insert_pilots(&x, &x, 0.05, 3).unwrap();
        let wf = pulse_shape(&frame, 8, 0.01, 32, 32e9).unwrap();
        let fwd = frequency_shift(&wf, 37.5e9);
        let back = frequency_shift(&fwd, -fwd.center_frequency_offset);
        assert!(back.center_frequency_offset.abs() < 1e-6);
        for (a, b) in back.samples_x.iter().zip(&wf.samples_x) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn resample_preserves_samples_of_bandlimited_signal() {
        // Build an exactly band-limited record: random spectrum inside
        // +-40 GHz at 512 GS/s, zero elsewhere.
        let n = 4096;
        let fs = 512e9;
        let mut rng = crate::util::seeded_rng(9, "resample", 0);
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for (k, v) in spec.iter_mut().enumerate() {
            if crate::util::bin_frequency(k, n, fs).abs() < 40e9 {
                *v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let mut x = spec;
        crate::util::ifft_in_place(&mut x);
        let wf = DualPolWaveform::new(x.clone(), x, fs).unwrap();

        let down = resample(&wf, fs / 2.0).unwrap();
        assert_eq!(down.len(), wf.len() / 2);
        for (i, v) in down.samples_x.iter().enumerate() {
            assert!((v - wf.samples_x[2 * i]).norm() < 1e-12, "sample {i}");
        }
        let p_ratio = down.mean_power() / wf.mean_power();
        assert!((p_ratio - 1.0).abs() < 1e-9, "power ratio {p_ratio}");
        let up = resample(&down, fs).unwrap();
        for (a, b) in up.samples_x.iter().zip(&wf.samples_x) {
            assert!((a - b).norm() < 1e-12);
        }
        // non-integer target length is rejected
        assert!(resample(&wf, fs / 3.0).is_err());
    }
}

//! Nonlinear fiber propagation: symmetric split-step Fourier solution of the
//! Manakov equation over multi-span links with lumped EDFA gain and ASE.
//!
//! Records are treated as cyclic, so the linear operator is an exact
//! frequency-domain multiply and noiseless propagation inverts exactly under
//! digital backpropagation on the same step grid. The nonlinear phase uses
//! the mid-step-referenced effective length
//! (e^{alpha dz/2} - e^{-alpha dz/2})/alpha, which is symmetric in alpha, so
//! the backward pass mirrors the forward pass by sign negation alone.

use crate::util::{bin_frequency, fft_in_place, ifft_in_place, PLANCK, SPEED_OF_LIGHT};
use crate::waveform::DualPolWaveform;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// Fiber parameters in the units the specs of such systems are quoted in.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct FiberParams {
    pub alpha_db_per_km: f64,
    pub gamma_per_w_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub span_length_km: f64,
    pub step_size_m: f64,
    pub reference_wavelength_nm: f64,
}

impl Default for FiberParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            gamma_per_w_km: 1.3,
            dispersion_ps_nm_km: 17.0,
            span_length_km: 50.0,
            step_size_m: 100.0,
            reference_wavelength_nm: 1550.0,
        }
    }
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha_db_per_km),
            ("gamma", self.gamma_per_w_km),
            ("dispersion", self.dispersion_ps_nm_km),
            ("span length", self.span_length_km),
            ("step size", self.step_size_m),
            ("wavelength", self.reference_wavelength_nm),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("fiber {name} = {v} must be >= 0")));
            }
        }
        if self.step_size_m <= 0.0 || self.span_length_km <= 0.0 {
            return Err(Error::Config("span and step must be positive".into()));
        }
        let steps = self.span_length_km * 1000.0 / self.step_size_m;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "step size {} m does not divide span {} km",
                self.step_size_m, self.span_length_km
            )));
        }
        Ok(())
    }

    pub fn steps_per_span(&self) -> usize {
        (self.span_length_km * 1000.0 / self.step_size_m).round() as usize
    }

    /// beta2 in s^2/m at the reference wavelength: -D lambda^2 / (2 pi c).
    pub fn beta2(&self) -> f64 {
        let d_si = self.dispersion_ps_nm_km * 1e-6; // s/m^2
        let lambda = self.reference_wavelength_nm * 1e-9;
        -d_si * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
    }

    /// Power attenuation in nepers per meter.
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_per_km * (10f64.ln() / 10.0) / 1000.0
    }

    /// Span loss in dB.
    pub fn span_loss_db(&self) -> f64 {
        self.alpha_db_per_km * self.span_length_km
    }

    /// Accumulated dispersion of one span in ps/nm.
    pub fn span_dispersion_ps_nm(&self) -> f64 {
        self.dispersion_ps_nm_km * self.span_length_km
    }
}

/// Lumped amplifier parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct AmplifierParams {
    pub gain_db: f64,
    pub noise_figure_db: f64,
    pub add_noise: bool,
}

impl AmplifierParams {
    /// Single-polarization ASE power spectral density n_sp h nu (G-1), W/Hz.
    pub fn ase_psd(&self, wavelength_nm: f64) -> f64 {
        let g = 10f64.powf(self.gain_db / 10.0);
        let n_sp = 10f64.powf(self.noise_figure_db / 10.0) / 2.0;
        let nu = SPEED_OF_LIGHT / (wavelength_nm * 1e-9);
        n_sp * PLANCK * nu * (g - 1.0).max(0.0)
    }
}

/// Multi-span link description.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LinkConfig {
    pub n_spans: usize,
    pub fiber: FiberParams,
    pub amp: AmplifierParams,
    pub seed: u64,
}

impl LinkConfig {
    /// A link whose EDFA gain exactly offsets span loss.
    pub fn balanced(n_spans: usize, fiber: FiberParams, noise_figure_db: f64, seed: u64) -> Self {
        Self {
            n_spans,
            amp: AmplifierParams {
                gain_db: fiber.span_loss_db(),
                noise_figure_db,
                add_noise: true,
            },
            fiber,
            seed,
        }
    }

    pub fn total_dispersion_ps_nm(&self) -> f64 {
        self.fiber.span_dispersion_ps_nm() * self.n_spans as f64
    }
}

/// Signed step parameters shared by forward propagation and backpropagation.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    /// Power attenuation per meter (negative values amplify).
    pub alpha_per_m: f64,
    /// beta2 in s^2/m.
    pub beta2: f64,
    /// Nonlinear coefficient per W per meter.
    pub gamma_per_w_m: f64,
    pub step_m: f64,
    pub n_steps: usize,
}

impl StepParams {
    pub fn forward(fiber: &FiberParams) -> Self {
        Self {
            alpha_per_m: fiber.alpha_per_m(),
            beta2: fiber.beta2(),
            gamma_per_w_m: fiber.gamma_per_w_km / 1000.0,
            step_m: fiber.step_size_m,
            n_steps: fiber.steps_per_span(),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            alpha_per_m: -self.alpha_per_m,
            beta2: -self.beta2,
            gamma_per_w_m: -self.gamma_per_w_m,
            step_m: self.step_m,
            n_steps: self.n_steps,
        }
    }

    /// Mid-step-referenced effective nonlinear length; symmetric in alpha.
    fn nl_scale(&self) -> f64 {
        let a = self.alpha_per_m;
        let dz = self.step_m;
        if (a * dz).abs() < 1e-9 {
            dz
        } else {
            ((a * dz / 2.0).exp() - (-a * dz / 2.0).exp()) / a
        }
    }
}

/// Symmetric split-step propagation over `params.n_steps` steps.
/// Interior half-steps are merged: L(dz/2) [N L(dz)]^(n-1) N L(dz/2).
pub fn split_step(field: &DualPolWaveform, params: &StepParams) -> Result<DualPolWaveform> {
    if !field.is_finite() {
        return Err(Error::Numerical("non-finite samples entering fiber".into()));
    }
    if field.is_empty() || params.n_steps == 0 {
        return Ok(field.clone());
    }
    let n = field.len();
    let fs = field.sample_rate;
    let dz = params.step_m;
    let half = linear_factors(n, fs, params, dz / 2.0);
    let full = linear_factors(n, fs, params, dz);
    let nl_coeff = (8.0 / 9.0) * params.gamma_per_w_m * params.nl_scale();

    let mut x = field.samples_x.clone();
    let mut y = field.samples_y.clone();
    apply_linear(&mut x, &mut y, &half);
    for step in 0..params.n_steps {
        for i in 0..n {
            let p = x[i].norm_sqr() + y[i].norm_sqr();
            let rot = Complex64::from_polar(1.0, nl_coeff * p);
            x[i] *= rot;
            y[i] *= rot;
        }
        let lin = if step + 1 == params.n_steps { &half } else { &full };
        apply_linear(&mut x, &mut y, lin);
    }
    Ok(DualPolWaveform {
        samples_x: x,
        samples_y: y,
        sample_rate: fs,
        center_frequency_offset: field.center_frequency_offset,
    })
}

fn linear_factors(n: usize, fs: f64, params: &StepParams, dz: f64) -> Vec<Complex64> {
    let loss = (-params.alpha_per_m * dz / 2.0).exp();
    (0..n)
        .map(|k| {
            let f = bin_frequency(k, n, fs);
            let phase = 2.0 * std::f64::consts::PI * std::f64::consts::PI
                * params.beta2
                * f
                * f
                * dz;
            Complex64::from_polar(loss, phase)
        })
        .collect()
}

fn apply_linear(x: &mut [Complex64], y: &mut [Complex64], factors: &[Complex64]) {
    for pol in [x, y] {
        fft_in_place(pol);
        for (v, &h) in pol.iter_mut().zip(factors) {
            *v *= h;
        }
        ifft_in_place(pol);
    }
}

/// One fiber span (no amplifier).
pub fn ssfm_span(field: &DualPolWaveform, fiber: &FiberParams) -> Result<DualPolWaveform> {
    fiber.validate()?;
    split_step(field, &StepParams::forward(fiber))
}

/// EDFA: flat gain plus circular complex white ASE per polarization with
/// per-sample variance ase_psd * sample_rate.
pub fn edfa(
    field: &DualPolWaveform,
    amp: &AmplifierParams,
    wavelength_nm: f64,
    rng: &mut ChaCha12Rng,
) -> DualPolWaveform {
    let g_field = 10f64.powf(amp.gain_db / 20.0);
    let mut out = field.clone();
    out.scale(g_field);
    if amp.add_noise {
        let sigma2 = amp.ase_psd(wavelength_nm) * field.sample_rate;
        let sigma = (sigma2 / 2.0).sqrt();
        let mut gauss = |rng: &mut ChaCha12Rng| -> f64 {
            // Box-Muller on the deterministic stream
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        for pol in [&mut out.samples_x, &mut out.samples_y] {
            for v in pol.iter_mut() {
                *v += Complex64::new(sigma * gauss(rng), sigma * gauss(rng));
            }
        }
    }
    out
}

/// Full link: n_spans of (span, EDFA with gain = span loss). Deterministic
/// given the config seed regardless of caller threading.
pub fn propagate_link(field: &DualPolWaveform, link: &LinkConfig) -> Result<DualPolWaveform> {
    let mut snapshots = propagate_link_trace(field, link, false)?;
    Ok(snapshots.pop().expect("at least the input"))
}

/// Propagates and returns the field after every span (index 0 = input,
/// index s = after span s and its amplifier). With `keep_all` false only the
/// final field is kept (single-element tail for `propagate_link`).
pub fn propagate_link_trace(
    field: &DualPolWaveform,
    link: &LinkConfig,
    keep_all: bool,
) -> Result<Vec<DualPolWaveform>> {
    link.fiber.validate()?;
    let params = StepParams::forward(&link.fiber);
    let mut out = Vec::new();
    if keep_all {
        out.push(field.clone());
    }
    let mut current = field.clone();
    for span in 0..link.n_spans {
        let propagated = split_step(&current, &params)?;
        let mut rng = crate::util::seeded_rng(link.seed, "ase", span as u64);
        current = edfa(&propagated, &link.amp, link.fiber.reference_wavelength_nm, &mut rng);
        if keep_all {
            out.push(current.clone());
        }
    }
    if !keep_all {
        out.push(current);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{mean_power, seeded_rng};

    fn test_field(n: usize, fs: f64, power: f64, seed: u64) -> DualPolWaveform {
        // band-limited noise-like field at ~1/4 of Nyquist
        let mut rng = seeded_rng(seed, "fiber-test", 0);
        let mut make = |rng: &mut rand_chacha::ChaCha12Rng| {
            let mut spec = vec![Complex64::new(0.0, 0.0); n];
            for (k, v) in spec.iter_mut().enumerate() {
                if bin_frequency(k, n, fs).abs() < fs / 8.0 {
                    *v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            ifft_in_place(&mut spec);
            spec
        };
        let x = make(&mut rng);
        let y = make(&mut rng);
        let mut wf = DualPolWaveform::new(x, y, fs).unwrap();
        let scale = (power / wf.mean_power()).sqrt();
        wf.scale(scale);
        wf
    }

    #[test]
    fn pure_dispersion_matches_analytic_transfer() {
        let fiber = FiberParams {
            alpha_db_per_km: 0.0,
            gamma_per_w_km: 0.0,
            span_length_km: 50.0,
            step_size_m: 100.0,
            ..Default::default()
        };
        let wf = test_field(4096, 256e9, 1e-3, 1);
        let out = ssfm_span(&wf, &fiber).unwrap();
        // analytic: spectrum x exp(+j 2 pi^2 beta2 f^2 z)
        let z = 50e3;
        let beta2 = fiber.beta2();
        let n = wf.len();
        let mut expect = wf.samples_x.clone();
        fft_in_place(&mut expect);
        for (k, v) in expect.iter_mut().enumerate() {
            let f = bin_frequency(k, n, wf.sample_rate);
            *v *= Complex64::from_polar(
                1.0,
                2.0 * std::f64::consts::PI * std::f64::consts::PI * beta2 * f * f * z,
            );
        }
        ifft_in_place(&mut expect);
        let err: f64 = out
            .samples_x
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / expect.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-8, "relative L2 error {err}");
        // energy conserved
        let r = out.mean_power() / wf.mean_power();
        assert!((r - 1.0).abs() < 1e-12, "energy ratio {r}");
    }

    #[test]
    fn dispersionless_spm_matches_analytic_solution() {
        let fiber = FiberParams {
            alpha_db_per_km: 0.0,
            dispersion_ps_nm_km: 0.0,
            gamma_per_w_km: 1.3,
            span_length_km: 50.0,
            step_size_m: 100.0,
            ..Default::default()
        };
        let mut wf = test_field(2048, 256e9, 2e-3, 2);
        wf.samples_y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let out = ssfm_span(&wf, &fiber).unwrap();
        let l = 50e3;
        let g = 1.3e-3;
        for (a, b) in out.samples_x.iter().zip(&wf.samples_x) {
            let expect = b * Complex64::from_polar(1.0, (8.0 / 9.0) * g * b.norm_sqr() * l);
            let rel = (a - expect).norm() / expect.norm().max(1e-30);
            assert!(rel < 1e-9, "relative error {rel}");
        }
    }

    #[test]
    fn loss_only_attenuates_ten_db_over_fifty_km() {
        let fiber = FiberParams {
            gamma_per_w_km: 0.0,
            dispersion_ps_nm_km: 0.0,
            ..Default::default()
        };
        let wf = test_field(2048, 256e9, 1e-3, 3);
        let out = ssfm_span(&wf, &fiber).unwrap();
        let loss_db = 10.0 * (wf.mean_power() / out.mean_power()).log10();
        assert!((loss_db - 10.0).abs() < 1e-9, "loss {loss_db} dB");
    }

    #[test]
    fn rejects_non_finite_and_bad_step() {
        let mut wf = test_field(256, 256e9, 1e-3, 4);
        wf.samples_x[0] = Complex64::new(f64::NAN, 0.0);
        assert!(ssfm_span(&wf, &FiberParams::default()).is_err());
        let bad = FiberParams {
            step_size_m: 333.0,
            ..Default::default()
        };
        assert!(ssfm_span(&test_field(256, 256e9, 1e-3, 4), &bad).is_err());
    }

    #[test]
    fn second_order_step_convergence() {
        // error vs a 25 m reference shrinks ~4x when halving 200 m -> 100 m
        let wf = test_field(2048, 256e9, 4e-3, 5);
        let run = |step: f64| {
            let fiber = FiberParams {
                step_size_m: step,
                span_length_km: 10.0,
                ..Default::default()
            };
            ssfm_span(&wf, &fiber).unwrap()
        };
        let reference = run(25.0);
        let err = |a: &DualPolWaveform| -> f64 {
            let num: f64 = a
                .samples_x
                .iter()
                .zip(&reference.samples_x)
                .chain(a.samples_y.iter().zip(&reference.samples_y))
                .map(|(u, v)| (u - v).norm_sqr())
                .sum();
            let den: f64 = reference
                .samples_x
                .iter()
                .chain(&reference.samples_y)
                .map(|v| v.norm_sqr())
                .sum();
            (num / den).sqrt()
        };
        let e200 = err(&run(200.0));
        let e100 = err(&run(100.0));
        let ratio = e200 / e100;
        assert!(
            (ratio - 4.0).abs() < 0.5,
            "convergence ratio {ratio} (e200 {e200:.3e}, e100 {e100:.3e})"
        );
    }

    #[test]
    fn edfa_gain_only_scales() {
        let wf = test_field(1024, 256e9, 1e-3, 6);
        let amp = AmplifierParams {
            gain_db: 10.0,
            noise_figure_db: 4.5,
            add_noise: false,
        };
        let mut rng = seeded_rng(1, "edfa", 0);
        let out = edfa(&wf, &amp, 1550.0, &mut rng);
        let scale = 10f64.powf(0.5);
        for (a, b) in out.samples_x.iter().zip(&wf.samples_x) {
            assert!((a - b * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn edfa_noise_variance_matches_ase_psd() {
        let n = 1 << 20;
        let wf = DualPolWaveform::zeros(n, 256e9);
        let amp = AmplifierParams {
            gain_db: 10.0,
            noise_figure_db: 4.5,
            add_noise: true,
        };
        let mut rng = seeded_rng(2, "edfa", 0);
        let out = edfa(&wf, &amp, 1550.0, &mut rng);
        let expect = amp.ase_psd(1550.0) * 256e9;
        let got_x = mean_power(&out.samples_x);
        let got_y = mean_power(&out.samples_y);
        assert!((got_x / expect - 1.0).abs() < 0.02, "x ratio {}", got_x / expect);
        assert!((got_y / expect - 1.0).abs() < 0.02, "y ratio {}", got_y / expect);
    }

    #[test]
    fn cascaded_noiseless_edfas_compose() {
        let wf = test_field(512, 256e9, 1e-3, 7);
        let five = AmplifierParams {
            gain_db: 5.0,
            noise_figure_db: 4.5,
            add_noise: false,
        };
        let ten = AmplifierParams {
            gain_db: 10.0,
            ..five
        };
        let mut rng = seeded_rng(3, "edfa", 0);
        let a = edfa(&edfa(&wf, &five, 1550.0, &mut rng), &five, 1550.0, &mut rng);
        let b = edfa(&wf, &ten, 1550.0, &mut rng);
        for (u, v) in a.samples_x.iter().zip(&b.samples_x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_span_link_is_identity_and_seeded_links_repeat() {
        let wf = test_field(1024, 256e9, 1e-3, 8);
        let link = LinkConfig::balanced(0, FiberParams::default(), 4.5, 99);
        let out = propagate_link(&wf, &link).unwrap();
        assert_eq!(out, wf);

        let link = LinkConfig::balanced(3, FiberParams { span_length_km: 5.0, step_size_m: 250.0, ..Default::default() }, 4.5, 42);
        let a = propagate_link(&wf, &link).unwrap();
        let b = propagate_link(&wf, &link).unwrap();
        assert_eq!(a, b, "same seed gives bit-identical output");
        let link2 = LinkConfig { seed: 43, ..link };
        let c = propagate_link(&wf, &link2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ase_accumulates_linearly_over_spans() {
        // gamma = 0, zero signal: after N balanced spans the noise power is
        // N * ase_psd * fs within 0.2 dB.
        let fiber = FiberParams {
            gamma_per_w_km: 0.0,
            span_length_km: 50.0,
            step_size_m: 1000.0,
            ..Default::default()
        };
        let n = 1 << 17;
        let wf = DualPolWaveform::zeros(n, 256e9);
        for spans in [1usize, 5, 10] {
            let link = LinkConfig::balanced(spans, fiber, 4.5, 7 + spans as u64);
            let out = propagate_link(&wf, &link).unwrap();
            let expect = link.amp.ase_psd(1550.0) * 256e9 * spans as f64;
            let got = mean_power(&out.samples_x);
            let db = 10.0 * (got / expect).log10();
            assert!(db.abs() < 0.2, "{spans} spans: {db} dB off");
        }
    }

    #[test]
    fn trace_matches_final_field() {
        let wf = test_field(512, 256e9, 1e-3, 9);
        let link = LinkConfig::balanced(
            4,
            FiberParams { span_length_km: 5.0, step_size_m: 500.0, ..Default::default() },
            4.5,
            11,
        );
        let trace = propagate_link_trace(&wf, &link, true).unwrap();
        assert_eq!(trace.len(), 5);
        let fin = propagate_link(&wf, &link).unwrap();
        assert_eq!(trace.last().unwrap(), &fin);
    }
}

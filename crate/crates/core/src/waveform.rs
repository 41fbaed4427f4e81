//! Dual-polarization complex baseband waveform and its raw snapshot format.
//!
//! Snapshots are a small text header followed by interleaved little-endian
//! f64 I/Q pairs, x polarization block first, then y. The same format is
//! produced and consumed by the transmitter, fiber channel and receiver.

use crate::{Error, Result};
use num_complex::Complex64;
use std::io::{BufRead, Read, Write};

/// Complex baseband field on two polarizations at a common sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPolWaveform {
    pub samples_x: Vec<Complex64>,
    pub samples_y: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Offset of the carrier this record is centered on, relative to the
    /// WDM band center, in Hz.
    pub center_frequency_offset: f64,
}

impl DualPolWaveform {
    pub fn new(samples_x: Vec<Complex64>, samples_y: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples_x.len() != samples_y.len() {
            return Err(Error::Dimension(format!(
                "polarization lengths differ: {} vs {}",
                samples_x.len(),
                samples_y.len()
            )));
        }
        Ok(Self {
            samples_x,
            samples_y,
            sample_rate,
            center_frequency_offset: 0.0,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self {
            samples_x: vec![Complex64::new(0.0, 0.0); len],
            samples_y: vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
            center_frequency_offset: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_x.is_empty()
    }

    /// Mean power summed over both polarizations, in the waveform's units.
    pub fn mean_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e: f64 = self
            .samples_x
            .iter()
            .zip(&self.samples_y)
            .map(|(x, y)| x.norm_sqr() + y.norm_sqr())
            .sum();
        e / self.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.samples_x
            .iter()
            .chain(&self.samples_y)
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Scales both polarizations by a real factor.
    pub fn scale(&mut self, factor: f64) {
        for v in self.samples_x.iter_mut().chain(self.samples_y.iter_mut()) {
            *v *= factor;
        }
    }

    /// Writes the snapshot format: text header, then raw f64 I/Q pairs for
    /// the x polarization followed by the y polarization.
    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "fiberteq-waveform 1")?;
        writeln!(w, "sample_rate_hz {:.17e}", self.sample_rate)?;
        writeln!(w, "center_frequency_offset_hz {:.17e}", self.center_frequency_offset)?;
        writeln!(w, "samples_per_polarization {}", self.len())?;
        writeln!(w, "data")?;
        for pol in [&self.samples_x, &self.samples_y] {
            for v in pol {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_raw<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim() != "fiberteq-waveform 1" {
            return Err(Error::Waveform(format!("bad magic line {line:?}")));
        }
        let mut sample_rate = None;
        let mut offset = 0.0;
        let mut count = None;
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Waveform("truncated header".into()));
            }
            let line = line.trim();
            if line == "data" {
                break;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::Waveform(format!("bad header line {line:?}")))?;
            match key {
                "sample_rate_hz" => {
                    sample_rate = Some(value.parse::<f64>().map_err(|e| {
                        Error::Waveform(format!("bad sample rate {value:?}: {e}"))
                    })?)
                }
                "center_frequency_offset_hz" => {
                    offset = value
                        .parse::<f64>()
                        .map_err(|e| Error::Waveform(format!("bad offset {value:?}: {e}")))?
                }
                "samples_per_polarization" => {
                    count = Some(value.parse::<usize>().map_err(|e| {
                        Error::Waveform(format!("bad sample count {value:?}: {e}"))
                    })?)
                }
                _ => return Err(Error::Waveform(format!("unknown header key {key:?}"))),
            }
        }
        let sample_rate =
            sample_rate.ok_or_else(|| Error::Waveform("missing sample_rate_hz".into()))?;
        let count = count.ok_or_else(|| Error::Waveform("missing samples_per_polarization".into()))?;
        let mut read_pol = |n: usize| -> Result<Vec<Complex64>> {
            let mut buf = vec![0u8; 16 * n];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(16)
                .map(|c| {
                    Complex64::new(
                        f64::from_le_bytes(c[..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..].try_into().unwrap()),
                    )
                })
                .collect())
        };
        let samples_x = read_pol(count)?;
        let samples_y = read_pol(count)?;
        Ok(Self {
            samples_x,
            samples_y,
            sample_rate,
            center_frequency_offset: offset,
        })
    }
}

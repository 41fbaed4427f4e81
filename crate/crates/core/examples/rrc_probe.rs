// Dev probe: cascade ISI of truncated/windowed RRC pairs vs span and window.
use std::f64::consts::PI;

fn rrc(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-9 {
        1.0 + beta * (4.0 / PI - 1.0)
    } else if beta > 0.0 && (t.abs() - 1.0 / (4.0 * beta)).abs() < 1e-9 {
        (beta / 2f64.sqrt())
            * ((1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin()
                + (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos())
    } else {
        let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
        let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
        num / den
    }
}

fn isi(taps: &[f64], sps: usize) -> f64 {
    let n = taps.len();
    let mut cascade = vec![0.0f64; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            cascade[i + j] += taps[i] * taps[j];
        }
    }
    let center = n - 1;
    let peak = cascade[center];
    let mut worst: f64 = 0.0;
    let mut k = 1;
    while center + k * sps < cascade.len() {
        worst = worst.max(cascade[center + k * sps].abs() / peak);
        worst = worst.max(cascade[center - k * sps].abs() / peak);
        k += 1;
    }
    worst
}

fn kaiser(n: usize, beta: f64) -> Vec<f64> {
    fn i0(x: f64) -> f64 {
        let mut s = 1.0;
        let mut t = 1.0;
        for k in 1..30 {
            t *= (x / (2.0 * k as f64)).powi(2);
            s += t;
        }
        s
    }
    (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / (n - 1) as f64 - 1.0;
            i0(beta * (1.0 - r * r).sqrt()) / i0(beta)
        })
        .collect()
}

fn main() {
    let sps = 8;
    let beta_rc = 0.01;
    for span in [64usize, 128, 192, 256] {
        let n = span * sps + 1;
        let mid = (n - 1) as f64 / 2.0;
        let base: Vec<f64> = (0..n)
            .map(|i| rrc((i as f64 - mid) / sps as f64, beta_rc))
            .collect();
        print!("span {span:3}: rect {:.2e}", isi(&base, sps));
        for kb in [2.0f64, 4.0, 6.0, 8.0] {
            let w = kaiser(n, kb);
            let taps: Vec<f64> = base.iter().zip(&w).map(|(a, b)| a * b).collect();
            print!("  K{kb}: {:.2e}", isi(&taps, sps));
        }
        println!();
    }
}

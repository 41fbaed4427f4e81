// Dev probe: timing and BiAWGN waterfall sanity of the k=16384 codes.
use fiberteq::fec;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

fn main() {
    let t0 = std::time::Instant::now();
    let code = fec::plan_code(16384, 20160, fec::DEFAULT_LIFT_SEED).unwrap();
    println!(
        "build: {:?} rate {:.4} edges {}",
        t0.elapsed(),
        code.rate(),
        code.n_edges()
    );

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
    let mut gauss = move |rng: &mut rand_chacha::ChaCha12Rng| -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-12);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    // BiAWGN: x = +-1, y = x + n, LLR = 2y/sigma^2, SNR = 1/sigma^2
    for snr_db in [5.0f64, 5.2, 5.4, 5.6, 5.8, 6.0] {
        let sigma2 = 1.0 / 10f64.powf(snr_db / 10.0);
        let mut errs = 0usize;
        let mut bits = 0usize;
        let t = std::time::Instant::now();
        let frames = 6;
        for _ in 0..frames {
            let info: Vec<u8> = (0..code.k).map(|_| rng.gen_range(0..2)).collect();
            let tx = code.encode(&info).unwrap();
            let llrs: Vec<f64> = tx
                .iter()
                .map(|&b| {
                    let x = if b == 0 { 1.0 } else { -1.0 };
                    let y = x + gauss(&mut rng) * sigma2.sqrt();
                    2.0 * y / sigma2
                })
                .collect();
            let full = code.scatter(&llrs, 0.0).unwrap();
            let r = fec::decode_bp(&code, &full, 50).unwrap();
            errs += r
                .info_bits(code.k)
                .iter()
                .zip(&info)
                .filter(|(a, b)| a != b)
                .count();
            bits += code.k;
        }
        println!(
            "snr {:.1} dB: BER {:.2e} ({} errs / {} bits) {:.2?}/frame",
            snr_db,
            errs as f64 / bits as f64,
            errs,
            bits,
            t.elapsed() / frames as u32
        );
    }
}

use irs_codesign::channel::{
    build_geometry, gen_bs_irs_channel, gen_high_mobility_channels, realize, rician_vector,
    ExperimentConfig,
};
use irs_codesign::numerics::{c64, CVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 100_000;

fn small_cfg() -> ExperimentConfig {
    ExperimentConfig {
        bs_antennas: 2,
        irs_elements: 4,
        group_edge: 1,
        high_users: 1,
        ..ExperimentConfig::default()
    }
}

#[test]
fn rayleigh_second_moments() {
    let cfg = small_cfg();
    let pl = cfg.user_path_gain();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut vh, mut vg) = (0.0, 0.0);
    let (mut mean_re, mut mean_im) = (0.0, 0.0);
    for _ in 0..DRAWS {
        let (h, g) = gen_high_mobility_channels(&cfg, &mut rng);
        vh += h[0][0].norm_sqr();
        vg += g[0][0].norm_sqr();
        mean_re += h[0][0].re;
        mean_im += h[0][0].im;
    }
    let n = DRAWS as f64;
    let (vh, vg) = (vh / n, vg / n);
    assert!((vh / pl - 1.0).abs() < 0.02, "var(h)/pl = {}", vh / pl);
    assert!((vg / vh - 2.0).abs() < 0.05, "var(g)/var(h) = {}", vg / vh);
    // sample mean std per component is sqrt(pl/2/n)
    let sd = (pl / 2.0 / n).sqrt();
    assert!((mean_re / n).abs() < 3.0 * sd && (mean_im / n).abs() < 3.0 * sd);
}

#[test]
fn rician_variance_at_five_db() {
    let cfg = ExperimentConfig::default();
    let kappa = cfg.rician_factor();
    let los = CVector::from_element(1, c64(0.6, 0.8));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut acc = 0.0;
    for _ in 0..DRAWS {
        acc += rician_vector(&los, kappa, 1.0, &mut rng)[0].norm_sqr();
    }
    let power = acc / DRAWS as f64;
    assert!((power - 1.0).abs() < 0.02, "E|x|² = {power}");
}

#[test]
fn rician_zero_factor_is_rayleigh() {
    let los = CVector::from_element(1, c64(1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut acc = 0.0;
    let mut mean = c64(0.0, 0.0);
    for _ in 0..DRAWS {
        let x = rician_vector(&los, 0.0, 2.0, &mut rng)[0];
        acc += x.norm_sqr();
        mean += x;
    }
    assert!((acc / DRAWS as f64 / 2.0 - 1.0).abs() < 0.02);
    assert!((mean / DRAWS as f64).norm() < 0.02);
}

#[test]
fn bs_irs_magnitudes_ignore_rng() {
    let cfg = ExperimentConfig::default();
    let a = gen_bs_irs_channel(&build_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(1)), &cfg).unwrap();
    let b = gen_bs_irs_channel(&build_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(99)), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn same_seed_is_bit_identical() {
    let cfg = ExperimentConfig::default();
    let (ga, ca) = realize(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let (gb, cb) = realize(&cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    assert_eq!(ga.user_positions, gb.user_positions);
    assert_eq!(ca.bs_irs, cb.bs_irs);
    assert_eq!(ca.direct_low, cb.direct_low);
    assert_eq!(ca.irs_low, cb.irs_low);
    assert_eq!(ca.direct_high, cb.direct_high);
    assert_eq!(ca.irs_high, cb.irs_high);
    let finite = |v: &[CVector]| v.iter().all(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    assert!(finite(&ca.direct_low) && finite(&ca.irs_low) && finite(&ca.direct_high) && finite(&ca.irs_high));
    assert!(ca.bs_irs.iter().all(|z| z.norm().is_finite()));
}

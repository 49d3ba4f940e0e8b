//! Cross-module consistency checks: stream quality at scale, discretization
//! convergence, regime hand-offs, and output-format stability.

use llr_core::analytic;
use llr_core::limit_processes::BrownianGridConfig;
use llr_core::montecarlo::{
    ks_statistic, run_replications, sample_eta, sample_eta_prime, Model,
};
use llr_core::poisson_llr::{RhoParam, TruncationPolicy};
use llr_core::rng_streams::{SeedSpec, Stream};

fn stream(tag: u64) -> Stream {
    Stream::from_spec(&SeedSpec::new(777_000).child(tag))
}

#[test]
fn uniform_stream_ks_at_scale() {
    let mut s = stream(1);
    let n = 1_000_000usize;
    let mut draws: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
    draws.sort_by(f64::total_cmp);
    let d = ks_statistic(&draws, |x| x.clamp(0.0, 1.0)).unwrap();
    assert!(d < 0.002, "KS {d}");
}

#[test]
fn normal_stream_ks_at_scale() {
    let mut s = stream(2);
    let n = 1_000_000usize;
    let mut draws: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
    draws.sort_by(f64::total_cmp);
    let d = ks_statistic(&draws, analytic::normal_cdf).unwrap();
    assert!(d < 0.002, "KS {d}");
}

#[test]
fn brownian_grid_halving_is_converged() {
    // Halving h from 0.01 to 0.005 moves the moment estimates by less than
    // the combined 4-SE band: the O(h) discretization bias is already inside
    // the Monte Carlo noise at this scale.
    let n = 100_000;
    let seed = SeedSpec::new(777_000).child(3);
    let coarse = Model::Brownian(BrownianGridConfig {
        h: 0.01,
        ..Default::default()
    });
    let fine = Model::Brownian(BrownianGridConfig {
        h: 0.005,
        ..Default::default()
    });
    let rc = run_replications(&coarse, n, &seed, 4096).unwrap();
    let rf = run_replications(&fine, n, &seed, 4096).unwrap();
    let band_b = 4.0 * (rc.se_b + rf.se_b);
    let band_m = 4.0 * (rc.se_m + rf.se_m);
    assert!(
        (rc.b_hat - rf.b_hat).abs() < band_b,
        "B {} vs {} band {band_b}",
        rc.b_hat,
        rf.b_hat
    );
    assert!(
        (rc.m_hat - rf.m_hat).abs() < band_m,
        "M {} vs {} band {band_m}",
        rc.m_hat,
        rf.m_hat
    );
}

#[test]
fn small_rho_meets_brownian_regime() {
    // At rho = 0.05 the scaled moments sit within Monte Carlo noise plus a
    // 10% drift allowance of the Brownian-regime estimates. The allowance is
    // a calibration for the unquantified convergence rate, not a derived
    // bound.
    let n = 4000;
    let rho = 0.05f64;
    let poisson = Model::Poisson {
        rho: RhoParam::new(rho).unwrap(),
        policy: TruncationPolicy::default(),
    };
    let brownian = Model::Brownian(BrownianGridConfig::default());
    let seed = SeedSpec::new(777_000).child(4);
    let rp = run_replications(&poisson, n, &seed.child(0), 512).unwrap();
    let rb = run_replications(&brownian, n, &seed.child(1), 512).unwrap();
    let r2 = rho * rho;
    let gap_b = (r2 * rp.b_hat - rb.b_hat).abs();
    let gap_m = (r2 * rp.m_hat - rb.m_hat).abs();
    let band_b = 4.0 * (r2 * rp.se_b + rb.se_b) + 0.10 * rb.b_hat;
    let band_m = 4.0 * (r2 * rp.se_m + rb.se_m) + 0.10 * rb.m_hat;
    assert!(gap_b < band_b, "scaled B gap {gap_b} vs band {band_b}");
    assert!(gap_m < band_m, "scaled M gap {gap_m} vs band {band_m}");
}

#[test]
fn large_rho_argmax_is_exponential() {
    // rho = 20: the argmax is the first negative-side event with
    // overwhelming probability, so -xi is Exp(1) up to O(e^-20).
    let rho = RhoParam::new(20.0).unwrap();
    let policy = TruncationPolicy::default();
    let mut s = stream(5);
    let n = 10_000usize;
    let mut draws: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        let sample = llr_core::poisson_llr::sample_zeta_xi(&rho, &mut s, &policy).unwrap();
        assert!(sample.xi <= 0.0, "positive-side argmax at rho=20");
        draws.push(-sample.xi);
    }
    draws.sort_by(f64::total_cmp);
    let d = ks_statistic(&draws, |x| -(-x).exp_m1()).unwrap();
    let crit = 1.6276 / (n as f64).sqrt();
    assert!(d < crit, "KS {d} vs {crit}");
}

#[test]
fn ladder_supremum_oracles() {
    // One batch of 10^5 subcritical suprema feeds two oracles: the atom
    // complement P{eta > 0} = lambda, and the quarter-exponential mean
    // against the series-plus-quadrature closed form.
    let rho = RhoParam::new(1.0).unwrap();
    let lambda = rho.rho() * rho.lambda_plus();
    let mut s = stream(6);
    let n = 100_000usize;
    let mut above = 0u64;
    let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let eta = sample_eta(&rho, &mut s);
        if eta > 0.0 {
            above += 1;
        }
        let v = (eta / 4.0).exp();
        sum += v;
        sumsq += v * v;
    }
    let nf = n as f64;
    let p = above as f64 / nf;
    let tol_p = 4.0 * (lambda * (1.0 - lambda) / nf).sqrt();
    assert!((p - lambda).abs() < tol_p, "atom {p} vs {lambda}");

    let mean = sum / nf;
    let se = (((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0) / nf).sqrt();
    let expect = analytic::eta_exp_quarter_moment(rho.rho()).unwrap();
    assert!(
        (mean - expect).abs() < 4.0 * se,
        "mean {mean} vs {expect} (se {se})"
    );
}

#[test]
fn eta_prime_mean_tracks_rate() {
    let rho = RhoParam::new(0.5).unwrap();
    let mut s = stream(7);
    let n = 50_000usize;
    let sum: f64 = (0..n).map(|_| sample_eta_prime(&rho, &mut s)).sum();
    let mean = sum / n as f64;
    // Exp(rho) mean is 1/rho with sd 1/rho.
    let tol = 4.0 / (0.5 * (n as f64).sqrt());
    assert!((mean - 2.0).abs() < tol, "{mean}");
}

#[test]
fn sweep_efficiency_is_monotone() {
    let seed = SeedSpec::new(777_000).child(8);
    let rows = llr_core::montecarlo::sweep(
        &[0.25, 1.0, 4.0, 16.0],
        5000,
        &seed,
        1024,
        &TruncationPolicy::default(),
        None,
    )
    .unwrap();
    for w in rows.windows(2) {
        let slack = 4.0 * (w[0].se_e + w[1].se_e);
        assert!(
            w[1].e_hat <= w[0].e_hat + slack,
            "E rose from {} (rho {}) to {} (rho {})",
            w[0].e_hat,
            w[0].rho,
            w[1].e_hat,
            w[1].rho
        );
    }
    // Endpoints bracket the known range.
    assert!(rows[0].e_hat < 0.80 && rows[0].e_hat > 0.65);
    assert!(rows[3].e_hat < 0.56 && rows[3].e_hat > 0.44);
}

#[test]
fn estimate_row_serialization_schema() {
    let row = run_replications(
        &Model::Poisson {
            rho: RhoParam::new(1.0).unwrap(),
            policy: TruncationPolicy::default(),
        },
        1000,
        &SeedSpec::new(777_000).child(9),
        256,
    )
    .unwrap();
    let json = serde_json::to_value(&row).unwrap();
    for key in [
        "rho", "N", "B", "se_B", "M", "se_M", "E", "se_E", "rho2B", "rho2M", "truncated", "seed",
    ] {
        assert!(json.get(key).is_some(), "missing field {key}");
    }
    assert!(json["rho2B"].is_number());
    let back: llr_core::montecarlo::EstimateRow = serde_json::from_value(json).unwrap();
    assert_eq!(back.n, row.n);
    assert_eq!(back.b_hat.to_bits(), row.b_hat.to_bits());

    let limit = run_replications(&Model::Infinity, 1000, &SeedSpec::new(777_000).child(10), 256)
        .unwrap();
    assert!(serde_json::to_value(&limit).unwrap()["rho2B"].is_null());
}

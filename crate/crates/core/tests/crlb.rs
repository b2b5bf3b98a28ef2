mod support;

use std::f64::consts::PI;

use tsgbm::crlb::{weibull_crlb, weibull_fisher_information};
use tsgbm::simulators::weibull_sample;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn closed_form(eta: f64, gamma: f64) -> [[f64; 2]; 2] {
    let c = 1.0 - EULER_GAMMA;
    let i_ee = (gamma / eta).powi(2);
    let i_eg = -c / eta;
    let i_gg = (c * c + PI * PI / 6.0) / (gamma * gamma);
    [[i_ee, i_eg], [i_eg, i_gg]]
}

#[test]
fn fisher_information_matches_closed_form() {
    for &(eta, gamma) in support::WEIBULL_ROWS.iter().chain(&[(0.3, 0.7), (20.0, 1.0), (1.0, 20.0)]) {
        let num = weibull_fisher_information(eta, gamma).unwrap();
        let exact = closed_form(eta, gamma);
        for i in 0..2 {
            for j in 0..2 {
                let rel = (num[i][j] - exact[i][j]).abs() / exact[i][j].abs();
                assert!(rel < 1e-9, "({eta},{gamma}) I[{i}][{j}] = {} vs {}", num[i][j], exact[i][j]);
            }
        }
    }
}

#[test]
fn fisher_information_matches_score_covariance() {
    let (eta, gamma) = (2.0, 3.0);
    let y = weibull_sample(eta, gamma, 1_000_000, 12).unwrap().samples;
    let n = y.len() as f64;
    let (mut see, mut seg, mut sgg) = (0.0, 0.0, 0.0);
    for &v in &y {
        let z = (v / eta).powf(gamma);
        let se = gamma / eta * (z - 1.0);
        let sg = 1.0 / gamma + (v / eta).ln() * (1.0 - z);
        see += se * se;
        seg += se * sg;
        sgg += sg * sg;
    }
    let fim = weibull_fisher_information(eta, gamma).unwrap();
    for (mc, exact) in [(see / n, fim[0][0]), (seg / n, fim[0][1]), (sgg / n, fim[1][1])] {
        assert!((mc / exact - 1.0).abs() < 0.02, "{mc} vs {exact}");
    }
}

#[test]
fn crlb_scales_as_expected() {
    let (e1, g1) = weibull_crlb(2.0, 2.0, 1000).unwrap();
    let (e2, g2) = weibull_crlb(4.0, 2.0, 1000).unwrap();
    assert!((e2 / e1 - 4.0).abs() < 1e-9);
    assert!((g2 / g1 - 1.0).abs() < 1e-9);
    let (e3, g3) = weibull_crlb(2.0, 2.0, 4000).unwrap();
    assert!((e1 / e3 - 4.0).abs() < 1e-12);
    assert!((g1 / g3 - 4.0).abs() < 1e-12);
    let mut last = f64::INFINITY;
    for n in [1, 10, 100, 1000, 10_000] {
        let (e, _) = weibull_crlb(2.0, 2.0, n).unwrap();
        assert!(e < last);
        last = e;
    }
}

#[test]
fn crlb_rejects_bad_input() {
    assert!(weibull_crlb(2.0, 2.0, 0).is_err());
    assert!(weibull_crlb(0.0, 2.0, 10).is_err());
    assert!(weibull_crlb(2.0, f64::NAN, 10).is_err());
}

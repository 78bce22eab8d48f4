//! Least-squares (ε = 0) limit: the closed-form branch of the saddle and its
//! risk identities against an independent conjugate-gradient solver on the
//! normal equations.

use advrisk_core::model::{adversarial_risk, standard_risk, AsymptoticConfig};
use advrisk_core::saddle::{asymptotic_risks, solve_saddle};
use advrisk_core::simulate::{generate_instance, SeededRng};
use ndarray::{Array1, Array2};

/// Conjugate gradients on XᵀX θ = Xᵀy.
fn least_squares_cg(design: &Array2<f64>, labels: &Array1<f64>) -> Array1<f64> {
    let p = design.ncols();
    let b = design.t().dot(labels);
    let matvec = |v: &Array1<f64>| design.t().dot(&design.dot(v));
    let mut theta = Array1::zeros(p);
    let mut resid = b.clone();
    let mut dir = resid.clone();
    let mut rs = resid.dot(&resid);
    let b_norm = b.dot(&b).sqrt();
    for _ in 0..(4 * p) {
        if rs.sqrt() <= 1e-12 * b_norm {
            break;
        }
        let ad = matvec(&dir);
        let alpha = rs / dir.dot(&ad);
        theta.scaled_add(alpha, &dir);
        resid.scaled_add(-alpha, &ad);
        let rs_new = resid.dot(&resid);
        dir = &resid + &(dir * (rs_new / rs));
        rs = rs_new;
    }
    theta
}

#[test]
fn ols_risks_match_monte_carlo() {
    let cfg = AsymptoticConfig::new(2.0, 1.0, 1.0, 0.0, 0.5).unwrap();
    let sol = solve_saddle(&cfg).unwrap();
    let (sr_th, ar_th) = asymptotic_risks(&sol, &cfg).unwrap();
    assert_eq!(sr_th, 2.0);

    let p = 2000;
    let n = 4000;
    let master = SeededRng::new(31_337);
    let mut sr_sum = 0.0;
    let mut ar_sum = 0.0;
    let mut norm_sq_sum = 0.0;
    let seeds = 3;
    for k in 0..seeds {
        let mut rng = master.replicate(k);
        let inst = generate_instance(n, p, &cfg, &mut rng);
        let theta = least_squares_cg(&inst.design, &inst.labels);
        let hat = theta.as_slice().unwrap();
        let truth = inst.theta0.as_slice().unwrap();
        sr_sum += standard_risk(hat, truth, inst.sigma0).unwrap();
        ar_sum += adversarial_risk(hat, truth, inst.sigma0, cfg.eps_test).unwrap();
        norm_sq_sum += theta.dot(&theta) / p as f64;
    }
    let sr_emp = sr_sum / seeds as f64;
    let ar_emp = ar_sum / seeds as f64;
    let norm_sq = norm_sq_sum / seeds as f64;

    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(sr_emp, sr_th) <= 0.05, "sr {sr_emp} vs {sr_th}");
    assert!(rel(ar_emp, ar_th) <= 0.05, "ar {ar_emp} vs {ar_th}");
    // The norm limit used by the ε = 0 branch: V² + σ²/(δ−1).
    assert!(rel(norm_sq, 2.0) <= 0.05, "norm² {norm_sq} vs 2.0");
}

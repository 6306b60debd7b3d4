use invgamma::gamma_sub::{cdf_h, density_h};
use invgamma::inv_gamma::*;
use invgamma::montecarlo::*;
use invgamma::{GammaParams, QuadSpec, SeriesSpec};

fn p11() -> GammaParams {
    GammaParams::new(1.0, 1.0).unwrap()
}

#[test]
fn terminal_value_passes_chi_square() {
    let p = GammaParams::new(1.5, 2.0).unwrap();
    let xs = sample_h(p, 1.0, 0.05, 100_000, 2024).unwrap();
    let r = chi_square_equiprobable(&xs, 50, |x| cdf_h(p, 1.0, x)).unwrap();
    assert!(r.p_value > 0.01, "{r:?}");
    assert!(density_h(p, 1.0, 0.5).unwrap() > 0.0);
}

#[test]
fn grid_refinement_shrinks_passage_bias() {
    let p = p11();
    let exact = moments_l(p, 1.0, 1.0, &MomentRepresentation::new(MomentKind::SeriesMu)).unwrap();
    // the coarse cell of 10 fine steps is exactly the 1e-2 grid, so both estimates share paths;
    // N is large enough that the coarse bias of about Δ/2 = 5e-3 is many standard errors
    let s = FirstPassageSampler::new(p, 1e-3, 40.0)
        .with_bridge(10)
        .sample(1.0, 4_000_000, 77)
        .unwrap();
    assert_eq!(s.censored, 0);
    let (fine, _) = mean_stderr(&s.times).unwrap();
    let (coarse, _) = mean_stderr(&s.coarse_times).unwrap();
    assert!((fine - exact).abs() < (coarse - exact).abs(), "fine {fine}, coarse {coarse}, exact {exact}");
}

#[test]
fn laplace_functional_matches_simulation() {
    let p = p11();
    let s = FirstPassageSampler::new(p, 1e-3, 40.0).sample(1.0, 100_000, 5).unwrap();
    let upper: Vec<f64> = s.times.iter().map(|l| (-l).exp()).collect();
    let lower: Vec<f64> = s.lower_times().iter().map(|l| (-l).exp()).collect();
    let (hi, se) = mean_stderr(&lower).unwrap();
    let (lo, _) = mean_stderr(&upper).unwrap();
    let u = laplace_functional_u(p, 1.0, 1.0, LaplaceFunctionalForm::Auto, &SeriesSpec::default(), &QuadSpec::default()).unwrap();
    assert!(u > lo - 3.0 * se && u < hi + 3.0 * se, "u={u}, band [{lo}, {hi}] ± {se}");
}

#[test]
fn fourth_brownian_moment_matches_two_stage_simulation() {
    let p = p11();
    let rep = MomentRepresentation::new(MomentKind::SeriesMu);
    let analytic = brownian_timechange_moments(p, 1.0, 4, Which::SubordinatedL, &rep).unwrap().value;
    let s = FirstPassageSampler::new(p, 1e-3, 40.0).sample(1.0, 100_000, 8).unwrap();
    let b = simulate_brownian_timechange(&s.times, 8);
    let st = empirical_stats(&b, &[4.0]).unwrap();
    let m = st.moment(4.0).unwrap();
    // grid bias in L moves the fourth moment by at most 3 E[L] Δ · 2
    let bias = 6.0 * moments_l(p, 1.0, 1.0, &rep).unwrap() * 1e-3;
    assert!((m.mean - analytic).abs() < 3.0 * m.stderr + bias, "{} ± {} vs {analytic}", m.mean, m.stderr);
}

#[test]
fn inverse_law_passes_kolmogorov_smirnov() {
    let p = p11();
    let s = FirstPassageSampler::new(p, 1e-3, 40.0).sample(1.0, 100_000, 42).unwrap();
    let st = empirical_stats(&s.times, &[]).unwrap();
    let quad = QuadSpec::default();
    let d = ks_distance(&st.ecdf, |x| 1.0 - survival_l(p, 1.0, x).unwrap());
    // the density of L_1 peaks at x = 0 with value Π̄(1)
    let max_density = (0..200)
        .map(|i| density_l(p, 1.0, i as f64 * 0.02, &quad).unwrap_or(0.0))
        .fold(0.0, f64::max);
    assert!(d <= ks_allowance(st.n, s.step, max_density), "D = {d}");
}

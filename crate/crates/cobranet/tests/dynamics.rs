//! Cross-module statistical checks: graph-level particle survival against
//! the closed-form predictions, two-sided distributional duality, and the
//! long-horizon behavior of the tree Monte-Carlo.

use cobranet::cobrad::{estimate_mean_survival, estimate_survival};
use cobranet::degree::{compute_stats, presets};
use cobranet::duality::verify_distributional;
use cobranet::graph::{sample_dcm, Digraph};
use cobranet::seeding::stream_rng;
use cobranet::theory;
use cobranet::tree::{survival_probability_mc, OffspringLaw};

#[test]
fn single_label_survival_matches_prediction_full_scale() {
    // regular graph: survival of one label over a long horizon approaches
    // 1 - z_hat(6) = the limiting red density
    let seq = presets::regular6(10_000).build_sequence().unwrap();
    let g = sample_dcm(&seq, &mut stream_rng(90, 0)).unwrap();
    let trials = 200;
    let est = estimate_survival(&g, 0.3, 2, 17, 30.0, trials, 91).unwrap();
    let predicted = 1.0 - theory::z_hat_root(6, 0.3, 1.0 / 6.0).unwrap();
    assert!(
        (est.survival - predicted).abs() <= 3.0 * est.std_error,
        "survival {} vs predicted {predicted} (3se = {})",
        est.survival,
        3.0 * est.std_error
    );
}

#[test]
fn single_label_survival_matches_prediction_heterogeneous() {
    let seq = presets::half_10_2(2000).build_sequence().unwrap();
    let g = sample_dcm(&seq, &mut stream_rng(92, 0)).unwrap();
    let stats = compute_stats(&seq, 1.0).unwrap();
    // vertex 0 has out-degree 2 in this profile
    let est = estimate_survival(&g, 0.3, 2, 0, 25.0, 400, 93).unwrap();
    let predicted = 1.0 - theory::z_hat_root(2, 0.3, stats.rho).unwrap();
    assert!(
        (est.survival - predicted).abs() <= 3.0 * est.std_error + 0.02,
        "survival {} vs predicted {predicted}",
        est.survival
    );
}

#[test]
fn mean_survival_estimates_the_limiting_red_density() {
    let seq = presets::half_10_5(2000).build_sequence().unwrap();
    let g = sample_dcm(&seq, &mut stream_rng(94, 0)).unwrap();
    let est = estimate_mean_survival(&g, 0.3, 2, 25.0, 400, 95).unwrap();
    let predicted = theory::q_star_sum(&seq, 0.3).unwrap();
    assert!(
        (est.survival - predicted).abs() <= 3.0 * est.std_error + 0.02,
        "mean survival {} vs q_star {predicted}",
        est.survival
    );
}

#[test]
fn distributional_duality_on_a_doubled_cycle() {
    // 3-vertex cycle with doubled edges; joint laws of blue patterns and
    // extinction patterns agree cell by cell
    let g = Digraph::from_out_adj(vec![vec![1, 1], vec![2, 2], vec![0, 0]]).unwrap();
    let report = verify_distributional(&g, 3.0, 0.4, 2, 100_000, 96).unwrap();
    assert!(
        report.max_deviation_in_se < 4.0,
        "max deviation {} se (abs {})",
        report.max_deviation_in_se,
        report.max_abs_deviation
    );
}

#[test]
fn tree_mc_converges_once_the_cap_clears_the_relaxation_time() {
    // near the critical bias the transient decays like ~e^{-t/20} per
    // generation, so a cap of 60 still carries visible mass; with the cap
    // raised until doubling no longer moves the estimate, the Monte-Carlo
    // agrees with 1 - z_hat at p = 0.45 too
    let trials = 100_000u64;
    let cases = [
        ("regular6", presets::regular6(1000), 6u32),
        ("half-10-2", presets::half_10_2(1000), 2u32),
    ];
    for (name, profile, d_root) in cases {
        let seq = profile.build_sequence().unwrap();
        let law = OffspringLaw::from_sequence(&seq).unwrap();
        let stats = compute_stats(&seq, 1.0).unwrap();
        let predicted = 1.0 - theory::z_hat_root(d_root, 0.45, stats.rho).unwrap();
        let at_400 = survival_probability_mc(d_root, &law, 0.45, 400, trials, 97).unwrap();
        let at_800 = survival_probability_mc(d_root, &law, 0.45, 800, trials, 98).unwrap();
        // doubling check: the residual transient is below Monte-Carlo noise
        assert!(
            (at_400.survival - at_800.survival).abs()
                <= 3.0 * (at_400.std_error + at_800.std_error).max(1e-4),
            "{name}: cap 400 -> 800 moved the estimate from {} to {}",
            at_400.survival,
            at_800.survival
        );
        assert!(
            (at_400.survival - predicted).abs() <= 3.0 * at_400.std_error.max(1e-4),
            "{name}: mc {} vs predicted {predicted} at cap 400",
            at_400.survival
        );
    }
}

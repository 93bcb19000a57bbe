use approx::assert_relative_eq;

use chemonet::boundary::BoundarySpec;
use chemonet::experiment::{run, RunOptions};
use chemonet::fixtures::*;
use chemonet::stationary::{fixed_point, FixedPointOptions};

#[test]
fn single_arc_profile_is_steady_under_the_dynamics() {
    let net = single_arc(1.0, 100);
    let spec = BoundarySpec::zero(&net);
    let p = fixed_point(&net, &spec, 0.1, FixedPointOptions::default()).unwrap();
    let out = run(&net, &spec, p.to_state(&net).unwrap(), &RunOptions::new(10.0, 0.5), Some(&p)).unwrap();
    let drift = out.samples.iter().map(|s| s.distance.unwrap().sup()).fold(0.0, f64::max);
    assert!(drift <= 1e-6, "{drift}");
    assert_relative_eq!(out.samples.last().unwrap().mass, 0.1, max_relative = 1e-13);
}

/// With through-flow the profile is not constant and the first-order
/// scheme settles on a nearby discrete equilibrium; the gap is O(h).
#[test]
fn drift_from_a_nonconstant_profile_is_first_order() {
    let spec = BoundarySpec::constant(&[0.01, -0.01], &[0.05, 0.0]);
    let drift = |cells: usize| {
        let net = path2(cells);
        let p = fixed_point(&net, &spec, 0.1, FixedPointOptions::default()).unwrap();
        let out = run(&net, &spec, p.to_state(&net).unwrap(), &RunOptions::new(10.0, 1.0), Some(&p)).unwrap();
        out.samples.iter().map(|s| s.distance.unwrap().sup()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (drift(50), drift(100));
    assert!(coarse < 1e-3);
    let order = (coarse / fine).log2();
    assert!((0.8..1.3).contains(&order), "order {order}");
}

//! The whole pipeline instantiates at f32 with loosened tolerances.

use balayage_core::{
    assemble_with, equilibrium, sweep, DiagRule, DiscreteMeasure, DiscreteSpace, KernelSpec,
    RegionMask, SolveOptions,
};

#[test]
fn f32_pipeline_reproduces_the_hand_fixture() {
    let space = DiscreteSpace::<f32>::new(
        vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        vec![1.0, 1.0],
    )
    .unwrap();
    let spec = KernelSpec::<f32>::riesz(2.0, 3).unwrap();
    let form = assemble_with(&spec, &space, DiagRule::Fixed(2.0f32)).unwrap();

    let opts = SolveOptions::<f32> {
        tolerance: 1e-5,
        ..SolveOptions::default()
    };
    let mu = DiscreteMeasure::new(&space, vec![0.0f32, 1.0]).unwrap();
    let mask = RegionMask::from_indices(&space, vec![0]).unwrap();
    let r = sweep(&form, &mu, &mask, &opts).unwrap();
    assert!((r.swept.weights()[0] - 0.5).abs() < 1e-5);
    assert_eq!(r.swept.weights()[1], 0.0);
    assert!((r.distance * r.distance - 1.5).abs() < 1e-5);

    let cap = equilibrium(&form, &RegionMask::full(&space), &opts).unwrap();
    assert!((cap.capacity - 2.0 / 3.0).abs() < 1e-5);

    // JSON round-trip in f32 writes 9 significant digits.
    let text = mu.to_json();
    assert!(text.contains("1.00000000e0"), "{text}");
    let back = DiscreteMeasure::<f32>::from_json(&space, &text).unwrap();
    assert_eq!(back.weights(), mu.weights());
}

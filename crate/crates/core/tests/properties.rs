//! Structural invariants under randomized inputs.

use balayage_core::{
    assemble, build_grid, hahn_jordan, mask_from_predicate, DiscreteMeasure, DiscreteSpace,
    KernelSpec, RegionMask,
};
use proptest::prelude::*;

fn small_space() -> DiscreteSpace<f64> {
    build_grid(&[(0.0f64, 1.0), (0.0, 1.0)], &[4, 4]).unwrap()
}

proptest! {
    /// plus − minus reconstructs the input bit for bit, and the parts
    /// never share support.
    #[test]
    fn hahn_jordan_round_trip(raw in prop::collection::vec(-1e6f64..1e6, 16)) {
        let space = small_space();
        let signed = hahn_jordan(&space, &raw).unwrap();
        let net = signed.net_weights();
        for (a, b) in net.iter().zip(&raw) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (p, m) in signed.plus().weights().iter().zip(signed.minus().weights()) {
            prop_assert!(*p == 0.0 || *m == 0.0);
            prop_assert!(*p >= 0.0 && *m >= 0.0);
        }
    }

    /// A mask and its complement partition the index set.
    #[test]
    fn mask_complement_partition(bits in prop::collection::vec(any::<bool>(), 16)) {
        let space = small_space();
        let indices: Vec<usize> = bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        let mask = RegionMask::from_indices(&space, indices).unwrap();
        let co = mask.complement(&space).unwrap();
        prop_assert_eq!(mask.union(&co).unwrap(), RegionMask::full(&space));
        prop_assert!(mask.intersect(&co).unwrap().is_empty());
    }

    /// Grids have the advertised point count and total volume.
    #[test]
    fn grid_count_and_volume(rx in 1usize..6, ry in 1usize..6, w in 0.1f64..3.0, h in 0.1f64..3.0) {
        let g = build_grid(&[(0.0, w), (0.0, h)], &[rx, ry]).unwrap();
        prop_assert_eq!(g.len(), rx * ry);
        let volume: f64 = g.cell_weights().iter().sum();
        prop_assert!((volume - w * h).abs() <= 1e-12 * (w * h));
    }

    /// Measure JSON round-trips exactly at 17 significant digits.
    #[test]
    fn measure_json_round_trip(weights in prop::collection::vec(0.0f64..1e3, 16)) {
        let space = small_space();
        let m = DiscreteMeasure::new(&space, weights).unwrap();
        let back = DiscreteMeasure::<f64>::from_json(&space, &m.to_json()).unwrap();
        for (a, b) in back.weights().iter().zip(m.weights()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

/// Cauchy–Schwarz on 1000 random measure pairs: |κ(μ,ν)| ≤ ‖μ‖·‖ν‖ with
/// 1e−12 relative slack.
#[test]
fn cauchy_schwarz_holds() {
    use rand::{Rng, SeedableRng};
    let space = build_grid(&[(0.0f64, 1.0), (0.0, 1.0)], &[5, 5]).unwrap();
    let spec = KernelSpec::riesz(1.0, 2).unwrap();
    let form = assemble(&spec, &space).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let a = DiscreteMeasure::new(&space, (0..25).map(|_| rng.random::<f64>()).collect())
            .unwrap();
        let b = DiscreteMeasure::new(&space, (0..25).map(|_| rng.random::<f64>()).collect())
            .unwrap();
        let cross = form.inner_product(&a, &b).unwrap().abs();
        let bound = form.energy_norm(&a).unwrap() * form.energy_norm(&b).unwrap();
        assert!(cross <= bound * (1.0 + 1e-12), "{cross} > {bound}");
    }
}

/// Pairing symmetry is bitwise under argument swap.
#[test]
fn pairing_is_bitwise_symmetric() {
    use rand::{Rng, SeedableRng};
    let space = build_grid(&[(0.0f64, 1.0)], &[12]).unwrap();
    let spec = KernelSpec::riesz(0.5, 1).unwrap();
    let form = assemble(&spec, &space).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let x: Vec<f64> = (0..12).map(|_| rng.random::<f64>() - 0.5).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random::<f64>() - 0.5).collect();
        let ab = form.pairing(&x, &y).unwrap();
        let ba = form.pairing(&y, &x).unwrap();
        assert_eq!(ab.to_bits(), ba.to_bits());
    }
}

/// Masks from predicates agree with hand filtering.
#[test]
fn predicate_mask_matches_filter() {
    let space = small_space();
    let mask = mask_from_predicate(&space, |p| p[0] + p[1] < 0.8);
    for i in 0..space.len() {
        let p = space.point(i);
        assert_eq!(mask.contains(i), p[0] + p[1] < 0.8);
    }
}

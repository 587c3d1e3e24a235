mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use groundbound::fermion::{canonicalize, Ladder, Monomial, Symmetry};
use groundbound::models::{heisenberg_jw, ising_fermionic, HamiltonianSpec};
use groundbound::moment::{
    number_conserving_fourth_count, objective_from_hamiltonian, AffineEmbedding, Family, IndexMap,
    MomentLevel,
};
use groundbound::oracle::{diagonalize_fermionic, moments_from_state, SparseOperator};
use groundbound::projections::{min_eigenvalue_blocks, project_psd_blocks};
use groundbound::Error;
use proptest::prelude::*;

const LAYOUTS: [(Symmetry, MomentLevel); 4] = [
    (Symmetry::ParityOnly, MomentLevel::Second),
    (Symmetry::NumberConserving, MomentLevel::Second),
    (Symmetry::ParityOnly, MomentLevel::Fourth),
    (Symmetry::NumberConserving, MomentLevel::Fourth),
];

fn models(n: usize) -> Vec<HamiltonianSpec> {
    let mut out = vec![
        heisenberg_jw(n.max(2), 0.5, false).unwrap(),
        heisenberg_jw(n.max(2), -0.7, true).unwrap(),
    ];
    out.push(ising_fermionic(n.max(2), -1.0, 0.5, false).unwrap());
    out.push(ising_fermionic(n.max(2), 0.8, -0.3, true).unwrap());
    out
}

#[test]
fn oracle_moments_are_feasible_fixed_points() {
    let mut rng = common::rng(7);
    for trial in 0..50 {
        let n = 1 + trial % 4;
        let psi = common::random_state(&mut rng, n);
        for (sym, level) in LAYOUTS {
            let map = Arc::new(IndexMap::new(n, sym, level).unwrap());
            let emb = AffineEmbedding::from_shared(map.clone()).unwrap();
            let x = moments_from_state(&psi, n, map).unwrap();
            assert!(x.blocks().hermiticity_error() < 1e-12);
            assert!(min_eigenvalue_blocks(x.blocks()) > -1e-12);
            let p = emb.extract(&x);
            let back = emb.embed(&p).unwrap();
            assert!(
                back.blocks().max_abs_diff(x.blocks()) < 1e-12,
                "embed∘extract, N={n} {sym:?} {level:?}"
            );
            assert!(emb.project(x.blocks()).max_abs_diff(x.blocks()) < 1e-10);
            assert!(
                project_psd_blocks(x.blocks())
                    .unwrap()
                    .max_abs_diff(x.blocks())
                    < 1e-10
            );
        }
    }
}

#[test]
fn objective_matches_direct_expectation() {
    let mut rng = common::rng(11);
    for trial in 0..50 {
        let n = 2 + trial % 3;
        let psi = common::random_state(&mut rng, n);
        for h in models(n) {
            let direct = SparseOperator::from_hamiltonian(&h)
                .unwrap()
                .expectation(&psi);
            for (sym, level) in LAYOUTS {
                let map = Arc::new(IndexMap::new(n, sym, level).unwrap());
                let obj = match objective_from_hamiltonian(&h, map.clone()) {
                    Ok(obj) => obj,
                    Err(e) => {
                        // pairing terms need parity-only layouts, quartic terms need fourth moments
                        assert!(matches!(e, Error::UnsupportedTerm(_)));
                        assert!(sym == Symmetry::NumberConserving || level == MomentLevel::Second);
                        continue;
                    }
                };
                let x = moments_from_state(&psi, n, map).unwrap();
                assert!(
                    (obj.energy_of(&x) - direct).abs() < 1e-10,
                    "N={n} {sym:?} {level:?}"
                );
            }
        }
    }
}

#[test]
fn ising_objective_on_exact_ground_state() {
    let h = ising_fermionic(4, -1.0, 0.5, false).unwrap();
    let gs = diagonalize_fermionic(&h).unwrap();
    let map = Arc::new(IndexMap::new(4, Symmetry::ParityOnly, MomentLevel::Second).unwrap());
    let obj = objective_from_hamiltonian(&h, map.clone()).unwrap();
    let x = moments_from_state(&gs.state, 4, map).unwrap();
    assert!((obj.energy_of(&x) - gs.energy).abs() < 1e-10);
}

#[test]
fn heisenberg_ground_state_embeds_psd() {
    let h = heisenberg_jw(2, 0.5, false).unwrap();
    let gs = diagonalize_fermionic(&h).unwrap();
    let map = Arc::new(IndexMap::new(2, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
    let emb = AffineEmbedding::from_shared(map.clone()).unwrap();
    let x = moments_from_state(&gs.state, 2, map).unwrap();
    let y = emb.embed(&emb.extract(&x)).unwrap();
    assert!(min_eigenvalue_blocks(y.blocks()) > -1e-12);
}

#[test]
fn parameter_count_matches_enumeration() {
    for n in 1..=4 {
        let mut keys = BTreeSet::new();
        let ladders: Vec<Ladder> = (0..n)
            .flat_map(|k| [Ladder::create(k), Ladder::annihilate(k)])
            .collect();
        for &a in &ladders {
            for &b in &ladders {
                for k in canonicalize(&Monomial::new(&[a, b]).unwrap()).terms.keys() {
                    keys.insert(*k);
                }
                for &c in &ladders {
                    for &d in &ladders {
                        for k in canonicalize(&Monomial::new(&[a, b, c, d]).unwrap())
                            .terms
                            .keys()
                        {
                            keys.insert(*k);
                        }
                    }
                }
            }
        }
        let nc = keys
            .iter()
            .filter(|k| k.creators() == k.annihilators())
            .count();
        let map = IndexMap::new(n, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap();
        let emb = AffineEmbedding::new(map).unwrap();
        assert_eq!(emb.n_params(), nc, "N={n}");
        assert_eq!(number_conserving_fourth_count(n), nc);
        if n >= 2 {
            assert!(emb.n_params() < emb.n_entry_coords());
        }
    }
}

#[test]
fn number_conserving_layout_omits_mixed_families() {
    let map = IndexMap::new(3, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap();
    for f in [Family::U, Family::G, Family::H, Family::I] {
        assert!(map.family(f).is_none());
    }
    for f in [Family::T, Family::S, Family::M, Family::R, Family::Q] {
        assert!(map.family(f).is_some());
    }
}

proptest! {
    #[test]
    fn objective_is_affine(seed in 0u64..1000, t in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let map = Arc::new(IndexMap::new(3, Symmetry::ParityOnly, MomentLevel::Fourth).unwrap());
        let obj = objective_from_hamiltonian(&heisenberg_jw(3, 0.5, true).unwrap(), map.clone()).unwrap();
        let a = common::hermitian_blocks(&mut rng, &map.block_sizes(), 1.0);
        let b = common::hermitian_blocks(&mut rng, &map.block_sizes(), 1.0);
        let mut mix = a.scaled(t);
        mix.axpy(1.0 - t, &b);
        let lhs = obj.energy(&mix);
        let rhs = t * obj.energy(&a) + (1.0 - t) * obj.energy(&b);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn embedding_round_trip(seed in 0u64..1000, n in 1usize..4) {
        let mut rng = common::rng(seed);
        let map = IndexMap::new(n, Symmetry::ParityOnly, MomentLevel::Fourth).unwrap();
        let emb = AffineEmbedding::new(map).unwrap();
        let p: Vec<f64> = (0..emb.n_params()).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let x = emb.embed(&p).unwrap();
        prop_assert!(x.blocks().hermiticity_error() < 1e-14);
        let q = emb.extract(&x);
        let err = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }
}

#[test]
fn adjoint_keys_are_conjugate() {
    let map = IndexMap::new(3, Symmetry::ParityOnly, MomentLevel::Fourth).unwrap();
    let emb = AffineEmbedding::new(map).unwrap();
    let p: Vec<f64> = (0..emb.n_params()).map(|i| 0.01 * (i + 1) as f64).collect();
    for text in ["0+ 1", "0 2", "0+ 1+ 0 2", "1+ 0 1 2"] {
        let key = Monomial::parse(text).unwrap();
        let v = emb.key_value(&key, &p).unwrap();
        let adj = canonicalize(&key.adjoint());
        let (k, c) = adj.terms.iter().next().unwrap();
        let w = emb.key_value(k, &p).unwrap() * *c;
        assert!((v.conj() - w).norm() < 1e-15, "{text}");
    }
}

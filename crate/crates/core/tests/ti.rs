mod common;

use std::sync::Arc;

use groundbound::fermion::Symmetry;
use groundbound::linalg::CMatrix;
use groundbound::models::{heisenberg_jw, ising_fermionic};
use groundbound::moment::{number_conserving_fourth_count, IndexMap, MomentLevel};
use groundbound::oracle::{diagonalize_fermionic, moments_from_state};
use groundbound::projections::{min_eigenvalue_blocks, project_psd_blocks};
use groundbound::solver::{Init, SolverConfig};
use groundbound::ti::{dft_unitary, solve_ti, ti_project_psd, warm_start_extend, TiEmbedding};
use groundbound::Error;
use num_complex::Complex64;
use rand::Rng;

fn ti_embedding(n: usize, sym: Symmetry, level: MomentLevel) -> TiEmbedding {
    TiEmbedding::new(Arc::new(IndexMap::new(n, sym, level).unwrap())).unwrap()
}

#[test]
fn dft_diagonalizes_circulants() {
    let mut rng = common::rng(1);
    for n in [2, 3, 5, 8] {
        let c: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let m = CMatrix::from_fn(n, n, |i, j| c[(j + n - i) % n]);
        let v = dft_unitary(n).v;
        let d = v.adjoint() * m * &v;
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|p| d[p].norm_sqr())
            .sum();
        assert!(off.sqrt() < 1e-12, "N={n}");
    }
}

#[test]
fn sector_projection_equals_dense_projection() {
    let mut rng = common::rng(2);
    for (sym, level) in [
        (Symmetry::ParityOnly, MomentLevel::Second),
        (Symmetry::NumberConserving, MomentLevel::Fourth),
        (Symmetry::ParityOnly, MomentLevel::Fourth),
    ] {
        let emb = ti_embedding(4, sym, level);
        for _ in 0..3 {
            let p: Vec<f64> = (0..emb.n_params())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let params = emb.embed(&p).unwrap();
            let dense = emb.reconstruct(&params).unwrap();
            let via_sectors = ti_project_psd(&emb.to_sectors(&params).unwrap()).unwrap();
            let back = emb.reconstruct(&emb.from_sectors(&via_sectors)).unwrap();
            let direct = project_psd_blocks(dense.blocks()).unwrap();
            assert!(
                back.blocks().max_abs_diff(&direct) < 1e-10,
                "{sym:?} {level:?}"
            );
        }
    }
}

#[test]
fn exact_ground_states_are_fourier_sparse() {
    for n in [6, 10] {
        let h = heisenberg_jw(n, 0.5, true).unwrap();
        let gs = diagonalize_fermionic(&h).unwrap();
        let map =
            Arc::new(IndexMap::new(n, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
        let emb = TiEmbedding::new(map.clone()).unwrap();
        let x = moments_from_state(&gs.state, n, map).unwrap();
        assert!(emb.off_pattern_mass(&x) <= 1e-10, "N={n}");
        let params = emb.parameters_of(&x);
        assert!(
            emb.reconstruct(&params)
                .unwrap()
                .blocks()
                .max_abs_diff(x.blocks())
                < 1e-10
        );
        let sectors = emb.to_sectors(&params).unwrap();
        assert!(min_eigenvalue_blocks(&sectors) >= -1e-10);
        let energy = emb.objective(&h).unwrap().energy(&sectors);
        assert!(
            (energy - gs.energy).abs() < 1e-9,
            "N={n}: {energy} vs {}",
            gs.energy
        );
    }
}

#[test]
fn parameter_count_shrinks_by_at_least_half_n() {
    for n in 4..=9 {
        let ti = ti_embedding(n, Symmetry::NumberConserving, MomentLevel::Fourth).n_params();
        let dense = number_conserving_fourth_count(n);
        assert!(
            dense as f64 / ti as f64 >= n as f64 / 2.0,
            "N={n}: {dense}/{ti}"
        );
    }
}

#[test]
fn extension_preserves_offsets() {
    let map = Arc::new(IndexMap::new(6, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
    let small = TiEmbedding::new(map.clone()).unwrap();
    let gs = diagonalize_fermionic(&heisenberg_jw(6, 0.5, true).unwrap()).unwrap();
    let x = moments_from_state(&gs.state, 6, map).unwrap();
    let p = small.parameters_of(&x);
    let same = warm_start_extend(&p, &small).unwrap();
    let worst = same
        .blocks
        .iter()
        .zip(&p.blocks)
        .map(|(x, y)| (x - y).camax())
        .fold(0.0, f64::max);
    assert!(worst < 1e-14, "{worst:e}");
    let large = ti_embedding(9, Symmetry::NumberConserving, MomentLevel::Fourth);
    let q = warm_start_extend(&p, &large).unwrap();
    assert_eq!(q.n_sites, 9);
    // density ⟨a_0† a_0⟩ sits at offset 0 of the first T group
    assert_eq!(q.blocks[0][(0, 0)], p.blocks[0][(0, 0)]);
    assert!(large.reconstruct(&q).unwrap().blocks().hermiticity_error() < 1e-14);
    assert!(warm_start_extend(&q, &small).is_err());
}

#[test]
fn warm_start_saves_iterations() {
    let solve_at = |n: usize, init: Init| {
        let emb = ti_embedding(n, Symmetry::NumberConserving, MomentLevel::Fourth);
        let obj = emb
            .objective(&heisenberg_jw(n, 0.5, true).unwrap())
            .unwrap();
        // the saving is small and reverses at alpha = 0.5 on this instance
        let r = solve_ti(
            &obj,
            &emb,
            &SolverConfig {
                init,
                alpha: 0.1,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        (emb, r)
    };
    let (small, r8) = solve_at(8, Init::Zero);
    let large = ti_embedding(12, Symmetry::NumberConserving, MomentLevel::Fourth);
    let extended = warm_start_extend(&small.from_sectors(&r8.final_iterate), &large).unwrap();
    let (_, warm) = solve_at(12, Init::Warm(large.to_sectors(&extended).unwrap()));
    let (_, cold) = solve_at(12, Init::Zero);
    assert!(
        warm.iterations < cold.iterations,
        "{} vs {}",
        warm.iterations,
        cold.iterations
    );
}

#[test]
fn ti_and_dense_paths_agree() {
    use groundbound::moment::{objective_from_hamiltonian, AffineEmbedding};
    let h = heisenberg_jw(6, 0.5, true).unwrap();
    let map = Arc::new(IndexMap::new(6, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
    let emb = TiEmbedding::new(map.clone()).unwrap();
    let ti = solve_ti(&emb.objective(&h).unwrap(), &emb, &SolverConfig::default()).unwrap();
    let dense_emb = AffineEmbedding::from_shared(map.clone()).unwrap();
    let obj = objective_from_hamiltonian(&h, map).unwrap();
    let dense = groundbound::solver::solve(&obj, &dense_emb, &SolverConfig::default()).unwrap();
    assert!(
        (ti.lower_bound - dense.lower_bound).abs() < 1e-3,
        "{} vs {}",
        ti.lower_bound,
        dense.lower_bound
    );
    let exact = diagonalize_fermionic(&h).unwrap().energy;
    assert!(ti.lower_bound <= exact + 1e-3);
}

#[test]
fn ising_ti_matches_closed_form() {
    use groundbound::models::{ising_exact_energy, MomentumLabel};
    let n = 12;
    let emb = ti_embedding(n, Symmetry::ParityOnly, MomentLevel::Second);
    let obj = emb
        .objective(&ising_fermionic(n, -1.0, 0.5, true).unwrap())
        .unwrap();
    let cfg = SolverConfig {
        dykstra: groundbound::projections::DykstraConfig {
            statistic: groundbound::projections::StoppingStatistic::IncrementChange,
            ..groundbound::projections::DykstraConfig::new(1e-8)
        },
        ..SolverConfig::with_tolerance(1e-8)
    };
    let r = solve_ti(&obj, &emb, &cfg).unwrap();
    let exact = ising_exact_energy(n, -1.0, 0.5, MomentumLabel::Even);
    assert!(
        ((r.lower_bound - exact) / exact).abs() < 1e-6,
        "{} vs {exact}",
        r.lower_bound
    );
}

#[test]
fn non_invariant_hamiltonian_is_rejected() {
    let emb = ti_embedding(4, Symmetry::ParityOnly, MomentLevel::Second);
    let h = ising_fermionic(4, -1.0, 0.5, false).unwrap();
    assert!(matches!(emb.objective(&h), Err(Error::TiStructure(_))));
}

#[test]
fn parameters_survive_record_round_trip() {
    use groundbound::ti::TiParameters;
    let emb = ti_embedding(5, Symmetry::NumberConserving, MomentLevel::Fourth);
    let p: Vec<f64> = (0..emb.n_params()).map(|i| (i as f64).cos()).collect();
    let params = emb.embed(&p).unwrap();
    let json = serde_json::to_string(&params.to_record()).unwrap();
    let back = TiParameters::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
    assert_eq!(back, params);
}

#[test]
fn correlations_read_from_parameters() {
    use groundbound::oracle::{spin_zz, zz_correlation};
    let n = 6;
    let gs = diagonalize_fermionic(&heisenberg_jw(n, 0.5, true).unwrap()).unwrap();
    let map = Arc::new(IndexMap::new(n, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
    let emb = TiEmbedding::new(map.clone()).unwrap();
    let x = moments_from_state(&gs.state, n, map).unwrap();
    let m = emb.moments(emb.parameters_of(&x)).unwrap();
    for d in 1..n {
        let z = zz_correlation(&m, 0, d).unwrap();
        assert!((z - spin_zz(&gs.state, 0, d)).abs() < 1e-10, "d={d}");
    }
}

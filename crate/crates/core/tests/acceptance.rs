//! Acceptance suite: one test per criterion, each printing a single
//! `[PASS]`/`[FAIL]` line.

mod common;

use common::*;
use pointreg::align::{negative_branch_error, solve, solve_labeled, LabeledPair};
use pointreg::registration::{register, similarity_score};
use pointreg::stats::moments;
use pointreg::synth::{generate, oracle_grid_2d, random_rotation, rng_for, SynthSpec};
use pointreg::{AlignOptions, Error, Mode, PairTable, PointSet, RegistrationConfig, Termination, Transform};
use rand::Rng;

const RAW: AlignOptions<f64> = AlignOptions { allow_reflection: true, rank_tol: 1e-10 };
const PROPER: AlignOptions<f64> = AlignOptions { allow_reflection: false, rank_tol: 1e-10 };

#[test]
fn ac01_orthogonality_and_determinant() {
    let mut worst_orth: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    let mut checked = 0;
    for dim in [2, 3, 4, 6] {
        let mut accepted = 0;
        let mut seed = 0;
        while accepted < 1000 {
            seed += 1;
            let inst = weighted_instance(seed * 31 + dim as u64, dim, dim + 3);
            let raw = match solve(&inst.u, &inst.v, &inst.table, Mode::Rigid, &RAW) {
                Ok(s) => s,
                Err(e) if e.is_ill_posed() => continue,
                Err(e) => panic!("{e}"),
            };
            let proper = solve(&inst.u, &inst.v, &inst.table, Mode::Rigid, &PROPER).unwrap();
            for l in [&raw.transform.rotation, &proper.transform.rotation] {
                worst_orth = worst_orth.max(l.orthogonality_error());
            }
            worst_det = worst_det.max((proper.transform.rotation.determinant() - 1.0).abs());
            accepted += 1;
        }
        checked += accepted;
    }
    verdict(
        "AC-1",
        "rotation orthogonality <= 1e-9, det = 1 +/- 1e-9",
        worst_orth <= 1e-9 && worst_det <= 1e-9,
        format!("{checked} instances, max ||LL'-I||_F = {worst_orth:.2e}, max |det-1| = {worst_det:.2e}"),
    );
}

#[test]
fn ac02_exact_recovery() {
    let (mut rot, mut trans, mut scale, mut e): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0;
    for dim in [2, 3, 4, 6] {
        for seed in 0..50u64 {
            for mode in [Mode::Rigid, Mode::Similarity] {
                let mut rng = rng_for(seed ^ (dim as u64) << 32);
                let truth = random_transform(&mut rng, dim, mode);
                let spec = SynthSpec { transform: truth.clone(), ..SynthSpec::unit(dim, dim + 5, seed) };
                let inst = generate(&spec).unwrap();
                let sol = solve(&inst.u, &inst.v, &inst.initial_table, mode, &PROPER).unwrap();
                rot = rot.max(frobenius_diff(&sol.transform.rotation, &truth.rotation));
                trans = trans.max(max_abs_diff(&sol.transform.translation, &truth.translation));
                scale = scale.max((sol.transform.scale - truth.scale).abs() / truth.scale);
                e = e.max(sol.e_min);
                count += 1;
            }
        }
    }
    verdict(
        "AC-2",
        "noiseless recovery: rotation <= 1e-8, translation <= 1e-8, scale rel <= 1e-10, e_min <= 1e-12",
        rot <= 1e-8 && trans <= 1e-8 && scale <= 1e-10 && e <= 1e-12,
        format!("{count} instances, rot {rot:.2e}, trans {trans:.2e}, scale {scale:.2e}, e_min {e:.2e}"),
    );
}

#[test]
fn ac03_grid_oracle_optimality() {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut best_gap = f64::INFINITY;
    let mut count = 0;
    for seed in 0..200u64 {
        let inst = weighted_instance(10_000 + seed, 2, 5);
        for mode in [Mode::Rigid, Mode::Similarity] {
            let sol = solve(&inst.u, &inst.v, &inst.table, mode, &PROPER).unwrap();
            let grid = oracle_grid_2d(&inst.u, &inst.v, &inst.table, 100_000, mode).unwrap();
            worst_gap = worst_gap.max(sol.e_min - grid.e_best);
            best_gap = best_gap.min(sol.e_min - grid.e_best);
            count += 1;
        }
    }
    verdict(
        "AC-3",
        "closed-form e_min <= grid best + 1e-6 (1e5 angles)",
        worst_gap <= 1e-6,
        format!("{count} solves, e_min - e_grid in [{best_gap:.2e}, {worst_gap:.2e}]"),
    );
}

#[test]
fn ac04_branch_selection() {
    let mut worst_rel: f64 = 0.0;
    let mut strict = true;
    let mut count = 0;
    for seed in 0..500u64 {
        let dim = 2 + (seed % 5) as usize;
        let inst = weighted_instance(20_000 + seed, dim, dim + 4);
        let e_neg = negative_branch_error(&inst.u, &inst.v, &inst.table, &RAW).unwrap();
        let raw = solve(&inst.u, &inst.v, &inst.table, Mode::Rigid, &RAW).unwrap();
        let gap = e_neg - raw.e_min;
        let expected = 4.0 * raw.trace_sqrt;
        worst_rel = worst_rel.max((gap - expected).abs() / expected);
        for mode in [Mode::Rigid, Mode::Similarity] {
            for opts in [RAW, PROPER] {
                let sol = solve(&inst.u, &inst.v, &inst.table, mode, &opts).unwrap();
                strict &= e_neg > sol.e_min;
            }
        }
        count += 1;
    }
    verdict(
        "AC-4",
        "e' - e_min = 4 Tr(sqrt(ZZ')) within 1e-8 rel, e' > e_min",
        worst_rel <= 1e-8 && strict,
        format!("{count} instances, max rel error {worst_rel:.2e}, strict = {strict}"),
    );
}

#[test]
fn ac05_rotation_independent_of_scale_mode() {
    let mut worst: f64 = 0.0;
    for seed in 0..1000u64 {
        let dim = 2 + (seed % 5) as usize;
        let inst = weighted_instance(30_000 + seed, dim, dim + 3);
        let rigid = solve(&inst.u, &inst.v, &inst.table, Mode::Rigid, &PROPER).unwrap();
        let sim = solve(&inst.u, &inst.v, &inst.table, Mode::Similarity, &PROPER).unwrap();
        worst = worst.max(frobenius_diff(&rigid.transform.rotation, &sim.transform.rotation));
    }
    verdict(
        "AC-5",
        "rigid and similarity rotations agree within 1e-10",
        worst <= 1e-10,
        format!("1000 instances, max ||L_rigid - L_sim||_F = {worst:.2e}"),
    );
}

#[test]
fn ac06_separable_tables_are_ill_posed() {
    let mut rejected = 0;
    let mut worst_z: f64 = 0.0;
    let total = 200;
    for seed in 0..total as u64 {
        let mut rng = rng_for(40_000 + seed);
        let dim = 2 + (seed % 5) as usize;
        let (n_u, n_v) = (rng.random_range(dim + 1..12), rng.random_range(dim + 1..12));
        let (half_u, half_v) = (1.0 + 4.0 * rng.random::<f64>(), 1.0 + 4.0 * rng.random::<f64>());
        let u = random_set(&mut rng, n_u, dim, half_u);
        let v = random_set(&mut rng, n_v, dim, half_v);
        let (a, b): (Vec<f64>, Vec<f64>) = if seed % 10 == 0 {
            (vec![1.0; n_u], vec![1.0; n_v])
        } else {
            ((0..n_u).map(|_| rng.random_range(0.01..1.0)).collect(), (0..n_v).map(|_| rng.random_range(0.01..1.0)).collect())
        };
        let table = PairTable::separable(&a, &b).unwrap();
        let summary = moments(&u, &v, &table).unwrap();
        let scale = u.extent().max(v.extent());
        worst_z = worst_z.max(summary.cross_cov.frobenius_norm() / (scale * scale));
        let all_modes_reject = [Mode::Rigid, Mode::Similarity]
            .iter()
            .all(|&mode| matches!(solve(&u, &v, &table, mode, &PROPER), Err(Error::IllPosed { .. })));
        if all_modes_reject {
            rejected += 1;
        }
    }
    verdict(
        "AC-6",
        "separable weights rejected as IllPosed, ||Z||_F <= 1e-12 scale^2",
        rejected == total && worst_z <= 1e-12,
        format!("{rejected}/{total} rejected, max ||Z||_F/scale^2 = {worst_z:.2e}"),
    );
}

#[test]
fn ac07_labeled_matches_procrustes_oracle() {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = rng_for(50_000 + seed);
        let dim = 2 + (seed % 5) as usize;
        let n = rng.random_range(dim + 1..3 * dim + 4);
        let mode = if seed % 2 == 0 { Mode::Rigid } else { Mode::Similarity };
        let u = random_set(&mut rng, n, dim, 1.0);
        let truth = random_transform(&mut rng, dim, mode);
        let v = jitter(&mut rng, &u.map_points(|p| truth.apply(p)), 0.2);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
        let pairs: Vec<LabeledPair<f64>> = (0..n)
            .map(|i| LabeledPair { u: u.point(i).to_vec(), v: v.point(i).to_vec(), weight: weights[i] })
            .collect();
        let sol = solve_labeled(&pairs, mode, &PROPER).unwrap();
        let us: Vec<Vec<f64>> = u.points().map(<[f64]>::to_vec).collect();
        let vs: Vec<Vec<f64>> = v.points().map(<[f64]>::to_vec).collect();
        let (r, t, s) = procrustes_oracle(&us, &vs, &weights, mode == Mode::Similarity);
        let dr = (to_nalgebra(&sol.transform.rotation) - r).norm();
        let dt = max_abs_diff(&sol.transform.translation, t.as_slice());
        worst = worst.max(dr).max(dt).max((sol.transform.scale - s).abs());
    }
    verdict(
        "AC-7",
        "labeled solve agrees with SVD Procrustes oracle within 1e-9",
        worst <= 1e-9,
        format!("200 instances, max parameter deviation {worst:.2e}"),
    );
}

/// Every source point is paired with two coincident template copies, so the
/// table never fits within one-to-one capacity and no residual is nonzero.
fn removal_free(seed: u64, dim: usize, n: usize) -> (PointSet<f64>, PointSet<f64>, PairTable<f64>) {
    let mut rng = rng_for(seed);
    let u = random_set(&mut rng, n, dim, 1.0);
    let truth = random_transform(&mut rng, dim, Mode::Rigid);
    let mut rows = Vec::new();
    let mut triplets = Vec::new();
    for (i, p) in u.points().enumerate() {
        let q = truth.apply(p);
        rows.push(q.clone());
        rows.push(q);
        triplets.push((i, 2 * i, 1.0));
        triplets.push((i, 2 * i + 1, 1.0));
    }
    (u, PointSet::from_rows(&rows).unwrap(), PairTable::from_triplets(triplets).unwrap())
}

#[test]
fn ac08_iteration_bound() {
    // (T, ε) as exact decimals num/100; ⌈T/ε⌉ computed in integers.
    let combos: [(u64, u64); 20] = [
        (100, 30),
        (100, 25),
        (100, 10),
        (90, 30),
        (70, 20),
        (50, 15),
        (100, 33),
        (250, 100),
        (37, 5),
        (81, 9),
        (10, 3),
        (200, 7),
        (123, 45),
        (64, 16),
        (99, 98),
        (300, 11),
        (1000, 333),
        (55, 50),
        (17, 2),
        (500, 499),
    ];
    let mut failures = Vec::new();
    for (n, &(t, e)) in combos.iter().enumerate() {
        let expected = t.div_ceil(e) as usize;
        let (u, v, table) = removal_free(60_000 + n as u64, 2 + n % 3, 6);
        let config = RegistrationConfig::new(t as f64 / 100.0, e as f64 / 100.0, Mode::Rigid).unwrap();
        let result = register(&u, &v, &table, &config).unwrap();
        let pruned = result.iterations.iter().any(|r| !r.pruned.is_empty());
        if result.iterations.len() != expected || result.termination != Termination::ThresholdExhausted || pruned {
            failures.push(format!("T={t}/100 eps={e}/100: {} vs {expected}", result.iterations.len()));
        }
    }
    verdict(
        "AC-8",
        "removal-free run does exactly ceil(T/eps) alignments, then ThresholdExhausted",
        failures.is_empty(),
        format!("{}/20 combinations exact {failures:?}", 20 - failures.len()),
    );
}

#[test]
fn ac09_robust_registration_smoke() {
    let seeds = 100;
    let mut good = 0;
    let mut precision_sum = 0.0;
    for seed in 0..seeds {
        let mut rng = rng_for(seed);
        let truth = Transform::rigid(random_rotation(2, &mut rng), vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let base = SynthSpec { transform: truth, spurious_pairs: 30, ..SynthSpec::unit(2, 10, seed) };
        let diameter = generate(&base).unwrap().v.diameter();
        let inst = generate(&SynthSpec { noise_sigma: 0.01 * diameter, ..base }).unwrap();
        let config = RegistrationConfig::data_scaled(&inst.v, Mode::Rigid).unwrap();
        let result = register(&inst.u, &inst.v, &inst.initial_table, &config).unwrap();
        let survivors = result.pairs.pairs();
        let hits = survivors.iter().filter(|p| inst.true_pairs.contains(p)).count();
        let precision = hits as f64 / survivors.len() as f64;
        precision_sum += precision;
        if result.converged && precision >= 0.8 {
            good += 1;
        }
    }
    verdict(
        "AC-9",
        "converged with >= 80% surviving-pair precision in >= 90% of seeds",
        good >= 90,
        format!("{good}/{seeds} seeds, mean precision {:.3}", precision_sum / seeds as f64),
    );
}

#[test]
fn ac10_score_separation() {
    let trials = 200;
    let mut separated = 0;
    for seed in 0..trials {
        let mut rng = rng_for(80_000 + seed);
        let truth = random_transform(&mut rng, 2, Mode::Rigid);
        let spec = SynthSpec { transform: truth, spurious_pairs: 30, ..SynthSpec::unit(2, 10, seed) };
        let inst = generate(&spec).unwrap();
        let bounds = bounding_box(&inst.v);
        let unrelated = PointSet::new(
            2,
            (0..inst.v.len()).flat_map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect::<Vec<_>>()).collect(),
        )
        .unwrap();
        let score = |v: &PointSet<f64>| {
            let config = RegistrationConfig::data_scaled(v, Mode::Rigid).unwrap();
            let result = register(&inst.u, v, &inst.initial_table, &config).unwrap();
            similarity_score(&result).unwrap()
        };
        if score(&inst.v) < score(&unrelated) {
            separated += 1;
        }
    }
    verdict(
        "AC-10",
        "matched-copy score < unrelated-set score in >= 95% of trials",
        separated * 100 >= 95 * trials,
        format!("{separated}/{trials} trials separated"),
    );
}

fn bounding_box(set: &PointSet<f64>) -> Vec<(f64, f64)> {
    (0..set.dim())
        .map(|d| {
            set.points().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[d]), hi.max(p[d])))
        })
        .collect()
}

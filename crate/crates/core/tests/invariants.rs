mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sockkt::cones::{
    analyze_direction, in_a, in_b, in_feasible_direction_cone, in_linearizing_cone,
    in_pseudotangent, point_context, tangent_probe, DirectionAnalysis, PointContext,
};
use sockkt::config::{Settings, Tolerances};
use sockkt::cq::{check_point, check_so_zangwill, sample_seed, tangent_samples, CqEntry};
use sockkt::deriv::CurveProbe;
use sockkt::gencvx::{probe_pseudoconvex, probe_so_pseudoconvex, probe_solpc_right, SampleBox};
use sockkt::kkt::find_multipliers;

const SAMPLES: usize = 16;

fn gaussian(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
    (0..s).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| c * x).collect()
}

/// Every feasible fixture point with its listed directions plus `d = 0`.
fn feasible_points(f: &common::Fixture) -> Vec<(Vec<f64>, Vec<Vec<f64>>)> {
    let tol = f.file.tolerances.unwrap_or_default();
    f.file
        .points
        .iter()
        .enumerate()
        .filter(|(_, x)| point_context(&f.problem, x, &tol).is_ok_and(|c| c.feasible))
        .map(|(p, x)| {
            let mut ds: Vec<Vec<f64>> = f.file.directions_of(p).to_vec();
            ds.push(vec![0.0; x.len()]);
            (x.clone(), ds)
        })
        .collect()
}

fn with_directions(mut visit: impl FnMut(&str, &PointContext<'_>, &DirectionAnalysis)) {
    let settings = Settings::default();
    for f in common::fixtures() {
        let tol = f.file.tolerances.unwrap_or_default();
        for (x, ds) in feasible_points(&f) {
            let ctx = point_context(&f.problem, &x, &tol).unwrap();
            for d in ds {
                let da = analyze_direction(&ctx, &d, &settings.grid);
                if da.critical {
                    visit(&f.name, &ctx, &da);
                }
            }
        }
    }
}

fn converged(ctx: &PointContext<'_>, da: &DirectionAnalysis) -> bool {
    da.k_set.iter().all(|&i| da.g_second_value(ctx, i).is_some())
}

#[test]
fn zero_direction_reduces_to_first_order_cones() {
    let grid = Settings::default().grid;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    with_directions(|name, ctx, da| {
        if da.d.iter().any(|&v| v != 0.0) {
            return;
        }
        for _ in 0..SAMPLES {
            let z = gaussian(&mut rng, ctx.dim());
            let a = in_a(ctx, da, &z, &grid);
            let z_cone = in_feasible_direction_cone(ctx, &z, &grid);
            assert_eq!(a.member, z_cone.member, "{name}: z = {z:?}");
            let b = in_b(ctx, da, &z);
            let l = in_linearizing_cone(ctx, &z);
            assert_eq!(b.member, l.member, "{name}: z = {z:?}");
            checked += 1;
        }
    });
    assert!(checked >= 8 * SAMPLES);
}

#[test]
fn memberships_are_invariant_under_curve_scaling() {
    let grid = Settings::default().grid;
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    with_directions(|name, ctx, da| {
        if !converged(ctx, da) {
            return;
        }
        for c in [2.0, 0.5] {
            let db = analyze_direction(ctx, &scaled(&da.d, c), &grid);
            for _ in 0..SAMPLES {
                let z = gaussian(&mut rng, ctx.dim());
                let zc = scaled(&z, c * c);
                assert_eq!(
                    in_a(ctx, da, &z, &grid).member,
                    in_a(ctx, &db, &zc, &grid).member,
                    "{name}: A with d = {:?}, z = {z:?}, c = {c}",
                    da.d
                );
                assert_eq!(
                    in_b(ctx, da, &z).member,
                    in_b(ctx, &db, &zc).member,
                    "{name}: B with d = {:?}, z = {z:?}, c = {c}",
                    da.d
                );
            }
        }
    });
}

#[test]
fn b_is_closed_under_convex_combinations() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    with_directions(|name, ctx, da| {
        if !converged(ctx, da) {
            return;
        }
        let members: Vec<Vec<f64>> = (0..4 * SAMPLES)
            .map(|_| scaled(&gaussian(&mut rng, ctx.dim()), 3.0))
            .filter(|z| in_b(ctx, da, z).is_yes())
            .collect();
        for pair in members.windows(2) {
            let w: f64 = rng.random_range(0.0..=1.0);
            let z: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| w * a + (1.0 - w) * b).collect();
            assert!(in_b(ctx, da, &z).is_yes(), "{name}: {z:?}");
        }
    });
}

fn replay_cq(name: &str, ctx: &PointContext<'_>, entry: &CqEntry, da: Option<&DirectionAnalysis>) {
    let Some(w) = entry.witness() else { return };
    let settings = Settings::default();
    let replay = match entry.name.as_str() {
        "zangwill" => {
            assert!(in_linearizing_cone(ctx, &w.vector).is_yes(), "{name}");
            in_feasible_direction_cone(ctx, &w.vector, &settings.grid)
        }
        "abadie" => tangent_probe(ctx, &w.vector, &settings.tangent, w.sample_seed),
        "guignard" => {
            let samples = tangent_samples(ctx, 2 * SAMPLES, entry.seed, &settings.tangent);
            let tangent: Vec<Vec<f64>> = samples
                .iter()
                .filter(|s| s.probe.is_yes())
                .map(|s| s.d.clone())
                .collect();
            in_pseudotangent(&tangent, &w.vector, &ctx.tol.lp_options())
        }
        "second_order_zangwill" => {
            let da = da.expect("direction for the second-order check");
            assert!(in_b(ctx, da, &w.vector).is_yes(), "{name}");
            in_a(ctx, da, &w.vector, &settings.grid)
        }
        other => panic!("unknown check {other}"),
    };
    assert!(replay.is_no(), "{name}: {} witness does not replay", entry.name);
    assert_eq!(replay, w.evidence, "{name}: {}", entry.name);
}

#[test]
fn cq_witnesses_replay_and_abadie_implies_guignard() {
    let settings = Settings::default();
    let mut failures = 0;
    for f in common::fixtures() {
        let tol = f.file.tolerances.unwrap_or_default();
        for (p, (x, ds)) in feasible_points(&f).into_iter().enumerate() {
            let ctx = point_context(&f.problem, &x, &tol).unwrap();
            let seed = sample_seed(7, p);
            let cq = check_point(&ctx, SAMPLES, seed, &settings.grid, &settings.tangent);
            if cq.abadie.witness().is_none() {
                assert!(cq.guignard.witness().is_none(), "{}: Guignard fails without Abadie", f.name);
            }
            for entry in [&cq.zangwill, &cq.abadie, &cq.guignard] {
                failures += usize::from(entry.witness().is_some());
                if entry.doubled {
                    continue;
                }
                replay_cq(&f.name, &ctx, entry, None);
            }
            for d in ds {
                let da = analyze_direction(&ctx, &d, &settings.grid);
                if !da.critical {
                    continue;
                }
                let so = check_so_zangwill(&ctx, &da, SAMPLES, seed, &settings.grid);
                failures += usize::from(so.witness().is_some());
                replay_cq(&f.name, &ctx, &so, Some(&da));
            }
        }
    }
    assert!(failures >= 3, "only {failures} failing checks across the fixtures");
}

#[test]
fn local_pseudoconcavity_of_curves_gives_second_order_zangwill() {
    let settings = Settings::default();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut premise = 0;
    with_directions(|name, ctx, da| {
        let curves_pass = (0..SAMPLES).all(|_| {
            let z = gaussian(&mut rng, ctx.dim());
            da.k_set.iter().all(|&i| {
                let g = &ctx.problem.constraints[i];
                let probe = CurveProbe::new(ctx.x.clone(), da.d.clone(), z.clone());
                probe_solpc_right(&probe, &g.expr, &g.gradient, &settings.grid, &tol)
                    .is_ok_and(|v| !v.fails() && v.witness().is_none())
            })
        });
        if !curves_pass {
            return;
        }
        premise += 1;
        let so = check_so_zangwill(ctx, da, SAMPLES, 3, &settings.grid);
        assert!(so.witness().is_none(), "{name}: d = {:?}: {so:?}", da.d);
    });
    assert!(premise >= 5, "premise held for {premise} directions");
}

#[test]
fn pseudoconvex_functions_are_second_order_pseudoconvex() {
    let settings = Settings::default();
    let tol = Tolerances::default();
    let mut clean = 0;
    for f in common::fixtures() {
        let functions = f.problem.objectives.iter().chain(&f.problem.constraints);
        for (k, h) in functions.enumerate() {
            for x in &f.file.points {
                let region = SampleBox::cube(x.len(), 1.0);
                let seed = sample_seed(19, k);
                let Ok(pc) = probe_pseudoconvex(&h.expr, &h.gradient, x, &region, 64, seed, &tol) else {
                    continue;
                };
                if let Some(w) = pc.witness() {
                    assert!(w.replay_pair(&h.expr, &h.gradient, x, &tol), "{}: {}", f.name, h.label);
                    continue;
                }
                clean += 1;
                let so = probe_so_pseudoconvex(&h.expr, &h.gradient, x, &region, 64, seed, &settings.grid, &tol)
                    .unwrap();
                assert!(!so.fails(), "{} {} at {x:?}: {so:?}", f.name, h.label);
            }
        }
    }
    assert!(clean >= 5, "only {clean} pseudoconvex cases");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn multiplier_verdict_survives_constraint_scaling(
        s in 1usize..=3,
        n in 1usize..=2,
        m in 1usize..=3,
        entries in prop::collection::vec(-3i32..=3, 40),
        scale in prop::collection::vec(prop_oneof![Just(0.25), Just(3.0), Just(10.0)], 3),
    ) {
        let mut it = entries.into_iter().map(f64::from);
        let mut take = |k: usize| -> Vec<f64> { (0..k).map(|_| it.next().unwrap()).collect() };
        let grad_f: Vec<Vec<f64>> = (0..n).map(|_| take(s)).collect();
        let grad_g: Vec<Vec<f64>> = (0..m).map(|_| take(s)).collect();
        let f2 = take(n);
        let g2 = take(m);
        let tol = Tolerances::default();
        let base = common::model(grad_f.clone(), f2.clone(), grad_g.clone(), g2.clone());
        let grad_c: Vec<Vec<f64>> = grad_g.iter().zip(&scale).map(|(g, c)| scaled(g, *c)).collect();
        let g2_c: Vec<f64> = g2.iter().zip(&scale).map(|(g, c)| g * c).collect();
        let rescaled = common::model(grad_f, f2, grad_c, g2_c);
        let a = find_multipliers(&base, &tol).unwrap();
        let b = find_multipliers(&rescaled, &tol).unwrap();
        prop_assert_eq!(a.is_some(), b.is_some());
    }
}

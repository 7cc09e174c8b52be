//! Randomized invariant checks: geometric inequalities that must hold for
//! every admissible domain, config canonicalization, and exactness properties
//! of the boundary functionals.

use std::sync::OnceLock;

use proptest::prelude::*;

use plapsym::deficits::{d5_at, pohozaev_residual};
use plapsym::geometry::{build_boundary, domain_eps, BoundaryCurve, DomainSpec};
use plapsym::levelset::{distribution_tables, schwarz_rearrangement};
use plapsym::mesh::{triangulate, Mesh};
use plapsym::solver::{solve, Field, Nonlinearity, SolverConfig};
use plapsym::vec2::{vec2, Vec2};
use plapsym::RunConfig;

fn shared_disk() -> &'static (BoundaryCurve, Mesh, Field) {
    static S: OnceLock<(BoundaryCurve, Mesh, Field)> = OnceLock::new();
    S.get_or_init(|| {
        let curve = build_boundary(&DomainSpec::disk(1.0)).unwrap();
        let mesh = triangulate(&curve, 0.15).unwrap();
        let (field, _) = solve(
            &mesh,
            &Nonlinearity::constant(1.0),
            &SolverConfig::with_p(2.0),
        )
        .unwrap();
        (curve, mesh, field)
    })
}

fn arb_domain() -> impl Strategy<Value = DomainSpec> {
    prop_oneof![
        (0.5f64..2.0).prop_map(DomainSpec::disk),
        (0.5f64..2.0, 0.5f64..2.0).prop_map(|(a, b)| DomainSpec::ellipse(a, b)),
        (0.6f64..1.5, 0.0f64..0.12, 3u32..7).prop_map(|(r, amp, k)| DomainSpec::star(r, amp, k)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // the isoperimetric deficit and the full asymmetry measure are
    // nonnegative for every admissible shape, zero only near the disk
    #[test]
    fn asymmetry_measures_are_nonnegative(spec in arb_domain()) {
        let curve = build_boundary(&spec).unwrap();
        let geom = domain_eps(&curve);
        prop_assert!(geom.iso_deficit >= -1e-12);
        prop_assert!(geom.normal_deficit >= -1e-9);
        prop_assert!(geom.eps >= -1e-9);
        prop_assert!(geom.m0_minus >= 0.0);
        if let DomainSpec { shape: plapsym::Shape::Disk { .. }, .. } = spec {
            prop_assert!(geom.eps.abs() < 1e-9);
        }
    }

    // every triangulation closes up: triangle areas sum to the polygon area
    // and the outward boundary normals integrate to zero
    #[test]
    fn meshes_close_up(spec in arb_domain(), h in 0.12f64..0.3) {
        let curve = build_boundary(&spec).unwrap();
        let mesh = triangulate(&curve, h).unwrap();
        let tri_sum: f64 = (0..mesh.triangles.len()).map(|t| mesh.tri_area(t)).sum();
        prop_assert!((tri_sum - mesh.area()).abs() <= 1e-9 * mesh.area());
        prop_assert!((mesh.area() - curve.area).abs() <= 0.05 * curve.area);
        let normal_sum = mesh
            .boundary_edges
            .iter()
            .fold(Vec2::ZERO, |acc, e| acc + e.outward * e.len);
        prop_assert!(normal_sum.norm() <= 1e-9 * curve.perimeter);
    }

    // parsing the canonical rendering reproduces the config and its hash,
    // and cosmetic rewrites (comments, spacing, duplicates) never change it
    #[test]
    fn config_canonicalization_round_trips(
        p in 1.1f64..4.0,
        h in 0.01f64..0.5,
        t_levels in 2usize..200,
        a in 0.5f64..2.0,
        seed in any::<u64>(),
    ) {
        let text = format!(
            "family=ellipse\na={a}\nb=0.9\np={p}\nh={h}\nt_levels={t_levels}\nseed={seed}\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&cfg.canonical()).unwrap();
        prop_assert_eq!(cfg.canonical(), again.canonical());
        prop_assert_eq!(cfg.hash(), again.hash());

        let noisy = format!(
            "# comment\n\nfamily=ellipse\nb = 0.9\n a={a}\np={p}\nh = {h}  # trailing\nh={h}\nt_levels={t_levels}\nseed={seed}\n"
        );
        let noisy_cfg = RunConfig::parse(&noisy).unwrap();
        prop_assert_eq!(noisy_cfg.hash(), cfg.hash());
    }

    // the boundary functional behind the center optimization is exactly
    // affine in the center for any field
    #[test]
    fn center_dependence_is_affine(
        x in -0.8f64..0.8, y in -0.8f64..0.8,
        s in 0.0f64..1.0,
    ) {
        let (curve, mesh, field) = shared_disk();
        let a = vec2(x, y);
        let b = vec2(-0.3, 0.25);
        let mix = a * s + b * (1.0 - s);
        let va = d5_at(mesh, field, curve, 2.0, a);
        let vb = d5_at(mesh, field, curve, 2.0, b);
        let vm = d5_at(mesh, field, curve, 2.0, mix);
        prop_assert!((vm - (va * s + vb * (1.0 - s))).abs() <= 1e-9);

        let pa = pohozaev_residual(mesh, field, &Nonlinearity::constant(1.0), 2.0, a);
        let pm = pohozaev_residual(mesh, field, &Nonlinearity::constant(1.0), 2.0, mix);
        let grad = Vec2::from(pa.rhs_gradient);
        prop_assert!((pm.rhs - (pa.rhs + grad.dot(mix - a))).abs() <= 1e-9);
    }

    // distribution tables are monotone in t no matter the level count
    #[test]
    fn distribution_tables_are_monotone(n_levels in 8usize..96) {
        let (_, mesh, field) = shared_disk();
        let f = Nonlinearity::constant(1.0);
        let tables = distribution_tables(mesh, field, &f, 2.0, n_levels).unwrap();
        prop_assert_eq!(tables.t.len(), n_levels);
        for w in tables.mu.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for w in tables.i_int.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for (&mu, &surf) in tables.mu.iter().zip(&tables.surf) {
            prop_assert!(mu > 0.0 && surf > 0.0);
        }
    }

    // the rearranged profile is radially nonincreasing with the right mass
    #[test]
    fn rearranged_profile_decreases(n_levels in 16usize..128) {
        let (_, mesh, field) = shared_disk();
        let profile = schwarz_rearrangement(mesh, field, n_levels);
        let radius = (mesh.area() / std::f64::consts::PI).sqrt();
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let r = radius * i as f64 / 40.0;
            let v = profile.value(r);
            prop_assert!(v <= prev + 1e-12);
            prop_assert!(v >= 0.0);
            prev = v;
        }
        prop_assert!((profile.value(0.0) - field.max()).abs() <= 0.05 * field.max());
        prop_assert!(profile.value(radius * 1.01) == 0.0);
    }
}

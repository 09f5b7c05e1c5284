use nalgebra::{Matrix3, Vector3, Vector4};
use proptest::prelude::*;

use s3curv::critical::{classify_point, find_critical_points};
use s3curv::curvature::{pullback_jet, AmbientPoly, CurvatureSpec};
use s3curv::geometry::{make_frame, random_orthogonal, sphere_to_stereo, stereo_to_sphere, SpherePoint};
use s3curv::invariants::{local_invariants, InvariantOptions};
use s3curv::problem::{builtin_spec, ProblemFile};
use s3curv::pv::{hessian_boundary_integral, hessian_boundary_integral_quadrature, pv_batch, PvOptions, PvRequest, Source};
use s3curv::quadrature::AngularRule;
use s3curv::reduction::spectrum;

fn point() -> impl Strategy<Value = SpherePoint> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("away from the origin", |a| Vector4::from(*a).norm() > 0.1)
        .prop_map(|a| SpherePoint::from_array(a).unwrap())
}

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-r..r).prop_map(Vector3::from)
}

fn poly() -> impl Strategy<Value = AmbientPoly> {
    prop::collection::vec((prop::array::uniform4(0u32..3), -1.0..1.0f64), 1..6)
        .prop_map(|t| AmbientPoly::new(std::iter::once(([0; 4], 6.0)).chain(t)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_round_trip(p in point(), seed in 0u64..1000, x in vec3(5.0)) {
        let f = make_frame(&p, seed);
        let q = stereo_to_sphere(&f, &x);
        prop_assert!((q.coords().norm() - 1.0).abs() < 1e-12);
        let back = sphere_to_stereo(&f, &q).unwrap();
        prop_assert!((back - x).norm() < 1e-10 * (1.0 + x.norm_squared()));
    }

    #[test]
    fn chart_is_conformal(p in point(), x in vec3(2.0), u in vec3(1.0), v in vec3(1.0)) {
        let f = make_frame(&p, 0);
        let h = 1e-6;
        let d = |w: &Vector3<f64>| (stereo_to_sphere(&f, &(x + w * h)).coords() - stereo_to_sphere(&f, &(x - w * h)).coords()) / (2.0 * h);
        let lhs = d(&u).dot(&d(&v));
        let rhs = 4.0 / (1.0 + x.norm_squared()).powi(2) * u.dot(&v);
        prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn frames_at_a_point_are_related_by_rotations(p in point(), a in 0u64..1000, b in 0u64..1000) {
        let q = make_frame(&p, a).change_of_basis(&make_frame(&p, b));
        prop_assert!((q.transpose() * q - Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn jet_quantities_transform_as_tensors(k in poly(), p in point(), a in 0u64..100, b in 100u64..200) {
        let spec = CurvatureSpec::new(k);
        let (f, g) = (make_frame(&p, a), make_frame(&p, b));
        let q = f.change_of_basis(&g);
        let jf = pullback_jet(&spec, &f, &Vector3::zeros(), false).quantities();
        let jg = pullback_jet(&spec, &g, &Vector3::zeros(), false).quantities();
        prop_assert!((q.transpose() * jf.gradient - jg.gradient).norm() < 1e-9);
        prop_assert!((q.transpose() * jf.hessian * q - jg.hessian).abs().max() < 1e-9);
        prop_assert!((jf.laplacian - jg.laplacian).abs() < 1e-9);
        prop_assert!((jf.bilaplacian - jg.bilaplacian).abs() < 1e-9 * jf.bilaplacian.abs().max(1.0));
    }

    #[test]
    fn rotation_moves_values(k in poly(), p in point(), seed in 0u64..1000) {
        let spec = CurvatureSpec::new(k);
        let q = random_orthogonal(seed);
        let a = spec.evaluate(&p, true);
        let b = spec.rotated(&q).evaluate(&p.transformed(&q), true);
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn boundary_integral_closed_form(entries in prop::array::uniform6(-5.0..5.0f64)) {
        let [a, b, c, d, e, f] = entries;
        let h = Matrix3::new(a, d, e, d, b, f, e, f, c);
        let closed = hessian_boundary_integral(&h);
        let quad = hessian_boundary_integral_quadrature(&h, &AngularRule::new(11));
        prop_assert!((closed - quad).abs() < 1e-10 * closed.max(1.0));
    }

    #[test]
    fn spectrum_increases_below_one(n in 2usize..200) {
        let (a, b) = (spectrum(n, 0).unwrap(), spectrum(0, n + 1).unwrap());
        prop_assert!(a < b && b < 1.0);
        prop_assert_eq!(spectrum(n - 1, 1).unwrap(), a);
    }

    #[test]
    fn problem_files_round_trip(k in poly(), pert in poly(), s in -0.01..0.01f64) {
        let spec = CurvatureSpec::new(k).with_poly_perturbation(pert, s);
        let file = ProblemFile::from_spec(&spec);
        let back = ProblemFile::parse(&file.to_json()).unwrap();
        prop_assert_eq!(back.spec_unchecked(), spec);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn pv_stable_under_inner_radius_halving(p in point(), seed in 0u64..100) {
        let spec = builtin_spec("k2_plus_bump").unwrap();
        let f = make_frame(&p, seed);
        let pv = PvOptions::default();
        let a = pv_batch(&spec, &f, &Vector3::zeros(), &[PvRequest::A0], Source::Full, &pv).unwrap()[0];
        let half = PvOptions { inner_radius: pv.inner_radius / 2.0, ..pv };
        let b = pv_batch(&spec, &f, &Vector3::zeros(), &[PvRequest::A0], Source::Full, &half).unwrap()[0];
        prop_assert!((a.value - b.value).abs() < 2.0 * a.error_estimate.max(b.error_estimate), "{a:?} {b:?}");
    }

    #[test]
    fn invariants_are_frame_independent(name in prop::sample::select(vec!["k1", "k2", "k3", "k2_minus_bump"]), i in 1usize..=4, a in 0u64..50, b in 50u64..100) {
        let spec = builtin_spec(name).unwrap();
        let rec = classify_point(&spec, &SpherePoint::basis(i));
        let x = local_invariants(&spec, &rec, &InvariantOptions { frame_seed: a, ..Default::default() }).unwrap();
        let y = local_invariants(&spec, &rec, &InvariantOptions { frame_seed: b, ..Default::default() }).unwrap();
        let tol = 2.0 * (x.a0.error + y.a0.error + 1e-9);
        prop_assert!((x.a0.value - y.a0.value).abs() < tol);
        prop_assert!((x.a1 - y.a1).abs() < 1e-9 * x.a1.abs().max(1.0));
        prop_assert!((x.a2 - y.a2).abs() < 1e-9 * x.a2.abs().max(1.0));
        prop_assert_eq!(x.morse_index, y.morse_index);
    }

    #[test]
    fn critical_points_are_equivariant(seed in 0u64..1000) {
        let spec = builtin_spec("k3").unwrap();
        let q = random_orthogonal(seed);
        let base = find_critical_points(&spec, 128, 0).unwrap();
        let rot = find_critical_points(&spec.rotated(&q), 128, 0).unwrap();
        prop_assert_eq!(base.len(), rot.len());
        for r in &base {
            let image = r.location.transformed(&q);
            let m = rot.iter().min_by(|a, b| a.location.chordal_distance(&image).total_cmp(&b.location.chordal_distance(&image))).unwrap();
            prop_assert!(m.location.chordal_distance(&image) < 1e-6);
            prop_assert_eq!(m.morse_index, r.morse_index);
            prop_assert!((m.laplacian - r.laplacian).abs() < 1e-9 * r.laplacian.abs().max(1.0));
        }
    }
}

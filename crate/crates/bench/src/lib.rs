//! Shared fixtures for the criterion benchmarks.

use s3curv::critical::{classify_point, CriticalRecord};
use s3curv::curvature::CurvatureSpec;
use s3curv::geometry::SpherePoint;
use s3curv::problem::builtin_spec;

/// A bundled spec and its critical record at `E₂`.
pub fn at_e2(name: &str) -> (CurvatureSpec, CriticalRecord) {
    let spec = builtin_spec(name).expect("bundled problem");
    let rec = classify_point(&spec, &SpherePoint::basis(2));
    (spec, rec)
}

use wavelab::acceptance::{self, Outcome};

fn check(id: u32) {
    let o: Outcome = acceptance::run(id).expect("known criterion");
    println!("{o}");
    assert!(o.passed, "{o}");
}

#[test]
fn criterion_01_euclidean_covariance() {
    check(1);
}

#[test]
fn criterion_02_hyperbolic_covariance() {
    check(2);
}

#[test]
fn criterion_03_gaussianity_and_energy() {
    check(3);
}

#[test]
fn criterion_04_spherical_function() {
    check(4);
}

#[test]
fn criterion_05_transform_eigen_relation() {
    check(5);
}

#[test]
fn criterion_06_inverse_round_trip() {
    check(6);
}

#[test]
fn criterion_07_shrinking_window_weyl() {
    check(7);
}

#[test]
fn criterion_08_qe_variance_decay() {
    check(8);
}

#[test]
fn criterion_09_cutoff_deviation() {
    check(9);
}

#[test]
fn criterion_10_propagator() {
    check(10);
}

#[test]
fn criterion_11_superposition_process() {
    check(11);
}

#[test]
fn criterion_12_nodal_counting() {
    check(12);
}

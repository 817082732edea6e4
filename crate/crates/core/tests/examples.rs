//! Every example builds and runs.

#[allow(dead_code)]
mod steady_profile {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/steady_profile.rs"));
}

#[allow(dead_code)]
mod profile_bounds {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/profile_bounds.rs"));
}

#[allow(dead_code)]
mod poisson_inequalities {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/poisson_inequalities.rs"));
}

#[allow(dead_code)]
mod exact_identities {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/exact_identities.rs"));
}

#[allow(dead_code)]
mod mode_spectrum {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mode_spectrum.rs"));
}

#[allow(dead_code)]
mod dissipativity {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/dissipativity.rs"));
}

#[allow(dead_code)]
mod linear_decay {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/linear_decay.rs"));
}

#[allow(dead_code)]
mod nonlinear_stability {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/nonlinear_stability.rs"));
}

#[allow(dead_code)]
mod threshold_search {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/threshold_search.rs"));
}

#[allow(dead_code)]
mod parameter_sweep {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/parameter_sweep.rs"));
}

#[test]
fn steady_profile_runs() {
    steady_profile::run_example().unwrap();
}

#[test]
fn profile_bounds_runs() {
    profile_bounds::run_example().unwrap();
}

#[test]
fn poisson_inequalities_runs() {
    poisson_inequalities::run_example().unwrap();
}

#[test]
fn exact_identities_runs() {
    exact_identities::run_example().unwrap();
}

#[test]
fn mode_spectrum_runs() {
    mode_spectrum::run_example().unwrap();
}

#[test]
fn dissipativity_runs() {
    dissipativity::run_example().unwrap();
}

#[test]
fn linear_decay_runs() {
    linear_decay::run_example().unwrap();
}

#[test]
fn nonlinear_stability_runs() {
    nonlinear_stability::run_example().unwrap();
}

#[test]
fn threshold_search_runs() {
    threshold_search::run_example().unwrap();
}

#[test]
fn parameter_sweep_runs() {
    parameter_sweep::run_example().unwrap();
}

use bgp_core::benchmarks::{problem, problem_catalog, PROBLEM_NAMES, REGISTRATION_POINTS};

#[test]
fn every_problem_respects_its_bounds() {
    let catalog = problem_catalog().unwrap();
    assert_eq!(catalog.len(), PROBLEM_NAMES.len());
    for p in &catalog {
        for seed in [1, 2] {
            p.validate(REGISTRATION_POINTS, seed).unwrap();
        }
    }
}

#[test]
fn dimensions_and_sizes() {
    let dims: Vec<usize> = PROBLEM_NAMES
        .iter()
        .map(|n| problem(n).unwrap().dim())
        .collect();
    assert_eq!(dims, vec![1, 1, 1, 2, 3]);
    assert!(problem("zz").is_err());
}

use approx::assert_relative_eq;
use vertexsim::model::{generate_model, r_matrix, reference_model};
use vertexsim::rng::{CounterRng, Domain};
use vertexsim::transfer::{
    apply_transfer, apply_transfer_matrix_free, assemble_transfer, brute_force_partition, free_energy_density,
    partition_element, spectral_summary, BoundaryRow, LatticeShape, SpectralOptions, TransferError,
};

#[test]
fn single_column_operator_is_r() {
    let r = r_matrix(&generate_model(0.7, 1.3, 4).unwrap());
    let t = assemble_transfer(&r, 1).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(t.get(i, j), r.entries()[i][j]);
        }
    }
}

#[test]
fn matrix_free_agrees_with_dense() {
    let mut rng = CounterRng::new(31, Domain::Inputs, 0);
    for n in 1..=8 {
        let r = r_matrix(&generate_model(rng.uniform(), 2.0, rng.next_u64()).unwrap());
        let t = assemble_transfer(&r, n).unwrap();
        let v = rng.uniform_vec(t.dim());
        let a = apply_transfer(&t, &v).unwrap();
        let b = apply_transfer_matrix_free(&r, n, &v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }
}

#[test]
fn free_energy_approaches_leading_eigenvalue() {
    let model = reference_model();
    let n = 3;
    let t = assemble_transfer(&r_matrix(&model), n).unwrap();
    let lambda0 = spectral_summary(&t, SpectralOptions::default()).unwrap().lambda0;
    let limit = -lambda0.ln() / (model.beta() * n as f64);
    let bottom = BoundaryRow::zeros(n);
    let gap = |m: usize| {
        let z = partition_element(&t, m, &bottom, &bottom).unwrap();
        (free_energy_density(z, LatticeShape::new(n, m).unwrap(), model.beta()).unwrap() - limit).abs()
    };
    // The boundary term decays like 1/M.
    assert!(gap(40) < gap(10));
    assert!(gap(160) < gap(10) / 8.0);
}

#[test]
fn small_lattice_free_energy_from_enumeration() {
    let model = generate_model(0.3, 2.0, 12).unwrap();
    let shape = LatticeShape::new(2, 2).unwrap();
    let t = assemble_transfer(&r_matrix(&model), 2).unwrap();
    let top = BoundaryRow::new(1, vec![0, 1]).unwrap();
    let bottom = BoundaryRow::new(0, vec![1, 1]).unwrap();
    let z_brute = brute_force_partition(&model, shape, &bottom, &top).unwrap();
    let z_t = partition_element(&t, 2, &bottom, &top).unwrap();
    let f_brute = free_energy_density(z_brute, shape, 2.0).unwrap();
    let f_t = free_energy_density(z_t, shape, 2.0).unwrap();
    assert_relative_eq!(f_brute, f_t, max_relative = 1e-12);
}

#[test]
fn input_validation() {
    let r = r_matrix(&reference_model());
    assert!(matches!(assemble_transfer(&r, 0), Err(TransferError::EmptyLattice { .. })));
    assert!(matches!(assemble_transfer(&r, 13), Err(TransferError::DimensionCap { .. })));
    let t = assemble_transfer(&r, 2).unwrap();
    let row = BoundaryRow::zeros(2);
    assert!(matches!(partition_element(&t, 0, &row, &row), Err(TransferError::ZeroPower)));
    assert!(free_energy_density(0.0, LatticeShape::new(1, 1).unwrap(), 2.0).is_err());
    let big = LatticeShape::new(5, 5).unwrap();
    let z = BoundaryRow::zeros(5);
    assert!(matches!(
        brute_force_partition(&reference_model(), big, &z, &z),
        Err(TransferError::EnumerationBudget { .. })
    ));
}

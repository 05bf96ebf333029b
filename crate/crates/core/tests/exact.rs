use fourfermi::exact::{ground_state_with, hermitian_eigen, SolverConfig, SolverMethod};
use fourfermi::model::build_hamiltonian;
use fourfermi::ModelSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

/// Lowest two levels of GN (L=4, Nf=2, m=0.5, g=0.2) from scipy `eigsh` on a
/// sparse matrix assembled independently from the Pauli text form.
const GN_4_2_E0: f64 = -8.47772427;
const GN_4_2_E1: f64 = -7.41474752;

fn random_hermitian(n: usize, entries: &[(f64, f64)]) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[(i * n + j) % entries.len()];
        Complex64::new(re, im)
    });
    &a + a.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermitian_eigen_pairs_are_accurate(
        n in 1usize..24,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 24 * 24),
    ) {
        let h = random_hermitian(n, &entries);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let scale = h.norm().max(1.0);
        for (k, &val) in vals.iter().enumerate() {
            let y = vecs.column(k);
            let r = &h * y - y * Complex64::new(val, 0.0);
            prop_assert!(r.norm() < 1e-12 * scale, "pair {k}: residual {}", r.norm());
        }
        let gram = vecs.adjoint() * &vecs;
        prop_assert!((gram - DMatrix::identity(n, n)).norm() < 1e-12);
    }
}

#[test]
fn lanczos_converges_on_sixteen_qubits() {
    let h = build_hamiltonian(&ModelSpec::gn(4, 2, 0.5, 0.2).unwrap()).unwrap();
    for seed in [1, 42] {
        let cfg = SolverConfig {
            method: SolverMethod::Lanczos,
            seed,
            ..SolverConfig::default()
        };
        let r = ground_state_with(&h, &cfg).unwrap();
        assert!(r.residual <= 1e-8, "seed {seed}: residual {}", r.residual);
        assert!((r.ground_energy - GN_4_2_E0).abs() < 1e-7, "{}", r.ground_energy);
        assert!((r.ground_energy + r.gap - GN_4_2_E1).abs() < 1e-6, "{}", r.gap);
        assert!(r.matvecs < 2000, "{}", r.matvecs);
    }
}

#[test]
fn lanczos_agrees_with_dense_below_the_dense_limit() {
    for spec in [
        ModelSpec::gn(5, 1, 0.5, 0.2).unwrap(),
        ModelSpec::thirring(2, 2, 0.5, 0.05).unwrap(),
    ] {
        let h = build_hamiltonian(&spec).unwrap();
        let solve = |method| {
            let cfg = SolverConfig {
                method,
                dense_limit: 12,
                ..SolverConfig::default()
            };
            ground_state_with(&h, &cfg).unwrap()
        };
        let (d, l) = (solve(SolverMethod::Dense), solve(SolverMethod::Lanczos));
        assert!((d.ground_energy - l.ground_energy).abs() < 1e-9);
        assert!((d.gap - l.gap).abs() < 1e-7);
        assert!(d.ground_state.fidelity(&l.ground_state).unwrap() > 1.0 - 1e-10);
    }
}

use proptest::prelude::*;

use porolbm::coupling::{effective_source_explicit, effective_source_semi_implicit, explicit_source_part};
use porolbm::elasticity::{
    back_transform, collide_moments, half_force, moments_forward, ElasticParams, Moments,
};
use porolbm::field::{ScalarField, VectorField};
use porolbm::flow::{flow_collide, flow_pressure, FlowState};
use porolbm::lattice::{stream, DistributionField, Grid, VelocitySet};

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_transform_round_trips(g in values(8)) {
        let cell: [f64; 8] = g.clone().try_into().unwrap();
        let back = Moments::from_distributions(&cell).to_distributions();
        for (a, b) in back.iter().zip(&cell) {
            prop_assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0));
        }
    }

    #[test]
    fn flow_collision_and_streaming_conserve_mass(f in values(9 * 20), kappa in 0.05f64..1.0) {
        let grid = Grid::new(5, 4, 0.25, 0.0625).unwrap();
        let field = DistributionField { values: f, ..DistributionField::for_grid(VelocitySet::D2Q9, &grid) };
        let before: f64 = field.values.iter().sum();
        let scale = field.values.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        let omega = porolbm::flow::flow_relaxation_rate(kappa, &grid).unwrap();
        let mut state = FlowState::new(field, omega, &grid);
        state.pressure = flow_pressure(&state.f, &ScalarField::for_grid(&grid), &grid);
        let post = flow_collide(&state, &ScalarField::for_grid(&grid), &grid);
        let after: f64 = stream(&post, &grid, [true, true]).unwrap().values.iter().sum();
        prop_assert!((after - before).abs() <= 1e-12 * scale);
    }

    #[test]
    fn elastic_collision_and_streaming_conserve_first_moments(g in values(8 * 12), lam in 0.1f64..3.0, mu in 0.05f64..1.0) {
        let grid = Grid::new(4, 3, 0.1, 0.01).unwrap();
        let params = ElasticParams::new(lam, mu, grid.dx).unwrap();
        let field = DistributionField { values: g, ..DistributionField::for_grid(VelocitySet::D2Q8, &grid) };
        let totals = |f: &DistributionField| {
            let m = moments_forward(f, &params).unwrap();
            (m.m_10.data.iter().sum::<f64>(), m.m_01.data.iter().sum::<f64>())
        };
        let before = totals(&field);
        let zero = VectorField::for_grid(&grid);
        let post = back_transform(&collide_moments(&half_force(&moments_forward(&field, &params).unwrap(), &zero, &params), &params));
        let after = totals(&stream(&post, &grid, [true, true]).unwrap());
        let scale = field.values.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!((after.0 - before.0).abs() <= 1e-12 * scale);
        prop_assert!((after.1 - before.1).abs() <= 1e-12 * scale);
    }

    #[test]
    fn semi_implicit_source_interpolates_between_limits(
        base in values(4), d1 in values(4), d2 in values(4), dtau in values(4),
        alpha in 0.0f64..1.0, r in 0.0f64..1.0,
    ) {
        let f = |v: &Vec<f64>| ScalarField { nx: 2, ny: 2, data: v.clone() };
        let (base, d1, d2, dtau) = (f(&base), f(&d1), f(&d2), f(&dtau));
        let (eps, dt) = (0.1, 0.01);
        let at = |r: f64| {
            let ex = explicit_source_part(&base, &d1, &d2, alpha, eps, dt, r);
            effective_source_semi_implicit(&ex, &dtau, &d1, alpha, eps, dt, r).unwrap()
        };
        let (lo, hi, mid) = (at(0.0), at(1.0), at(r));
        prop_assert_eq!(&lo, &effective_source_explicit(&base, &d1, &d2, alpha, eps, dt));
        for k in 0..4 {
            let lin = (1.0 - r) * lo.data[k] + r * hi.data[k];
            prop_assert!((mid.data[k] - lin).abs() <= 1e-9 * lin.abs().max(1.0));
        }
    }
}

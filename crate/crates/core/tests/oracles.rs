use hamfric_core::dynamics::{evolve, EvolveConfig, Integrator, SimState, SpongeConfig};
use hamfric_core::statics::{self_force, static_profile};
use hamfric_core::twave::{traveling_profile, wake_asymmetry, Regime, SpectralFriction};
use hamfric_core::{Field, Grid, Model, ModelParams, PotentialSpec, Space, Vector, ZeroMode};
use num_complex::Complex64;
use proptest::prelude::*;

fn e_model(kappa: f64, nu: f64) -> Model<f64> {
    let g = PotentialSpec::gaussian(1.0, 1.0);
    Model::new(ModelParams::e_model(kappa, nu), g, g).unwrap()
}

fn rel_diff(a: &Field, b: &Field) -> f64 {
    a.difference(b).unwrap().l2_norm() / b.l2_norm()
}

/// Field with axes 0 and 1 exchanged.
fn swap_xy(f: &Field) -> Field {
    let g = f.grid;
    let n = g.n;
    let mut values = f.values.clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                values[g.index(j, i, k)] = f.values[g.index(i, j, k)];
            }
        }
    }
    Field::from_values(g, values, f.space).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip_and_parseval(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32]), l in 1.0f64..30.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::new(n, l).unwrap();
        let values = (0..grid.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let f = Field::from_values(grid, values, Space::Position).unwrap();
        let spec = f.forward_transform().unwrap();
        prop_assert!(rel_diff(&spec.inverse_transform().unwrap(), &f) < 1e-13);
        prop_assert!((spec.l2_norm() / f.l2_norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn static_profile_translates_with_the_particle(i in 0usize..16, j in 0usize..16, k in 0usize..16) {
        let model = e_model(1.0, 1.0);
        let grid = Grid::new(16, 12.0).unwrap();
        let at_origin = static_profile(&model, &grid, Vector::zero(), ZeroMode::Strict).unwrap().field;
        let dx = grid.dx();
        let moved = static_profile(&model, &grid, Vector::new(i as f64, j as f64, k as f64) * dx, ZeroMode::Strict).unwrap().field;
        let n = grid.n;
        let shifted = Field::from_values(
            grid,
            (0..grid.len())
                .map(|idx| {
                    let (a, b, c) = grid.unravel(idx);
                    at_origin.values[grid.index((a + n - i) % n, (b + n - j) % n, (c + n - k) % n)]
                })
                .collect(),
            Space::Position,
        )
        .unwrap();
        prop_assert!(rel_diff(&moved, &shifted) < 1e-12, "{}", rel_diff(&moved, &shifted));
    }
}

#[test]
fn static_force_vanishes_and_profile_is_real() {
    let model = e_model(2.0, 1.0);
    let grid = Grid::new(32, 16.0).unwrap();
    for x in [Vector::zero(), Vector::new(0.37, -1.2, 2.9)] {
        let prof = static_profile(&model, &grid, x, ZeroMode::Strict).unwrap();
        assert!(prof.field.max_abs_imag() < 1e-14 * prof.field.max_abs());
        assert!(self_force(&model, &prof.field, x).unwrap().norm() < 1e-12);
        // Attractive coupling digs a well under the particle.
        let c = grid.index(16, 16, 16);
        let centred = static_profile(&model, &grid, Vector::zero(), ZeroMode::Strict).unwrap();
        assert!(centred.field.values[c].re < 0.0);
    }
}

#[test]
fn static_profile_scales_linearly_with_coupling() {
    let grid = Grid::new(16, 12.0).unwrap();
    let base = static_profile(&e_model(1.0, 1.0), &grid, Vector::zero(), ZeroMode::Strict)
        .unwrap()
        .field;
    let mut doubled = static_profile(&e_model(1.0, 2.0), &grid, Vector::zero(), ZeroMode::Strict)
        .unwrap()
        .field;
    doubled.scale(0.5);
    assert!(rel_diff(&doubled, &base) < 1e-14);
}

#[test]
fn traveling_wave_reduces_to_static_profile_at_small_speed() {
    let model = e_model(8.0, 1.0);
    let grid = Grid::new(32, 16.0).unwrap();
    let stat = static_profile(&model, &grid, Vector::zero(), ZeroMode::Strict)
        .unwrap()
        .field;
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&v| {
            let w = traveling_profile(&model, &grid, Vector::new(v, 0.0, 0.0), 0.0).unwrap();
            assert_eq!(w.regime, Regime::Subcritical);
            rel_diff(&w.profile, &stat)
        })
        .collect();
    // The correction is linear in the speed.
    assert!(errors[2] < 2.0 * 0.01, "{errors:?}");
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!((order - 1.0).abs() < 0.05, "{errors:?}");
    }
}

#[test]
fn traveling_wave_and_friction_rotate_with_the_velocity() {
    let g = PotentialSpec::gaussian(1.0, 1.0);
    let model = Model::new(ModelParams::b_model(1.0), g, g).unwrap();
    let grid = Grid::new(32, 24.0).unwrap();
    let along_x = traveling_profile(&model, &grid, Vector::new(1.5, 0.0, 0.0), 0.3).unwrap();
    let along_y = traveling_profile(&model, &grid, Vector::new(0.0, 1.5, 0.0), 0.3).unwrap();
    assert!(rel_diff(&swap_xy(&along_x.profile), &along_y.profile) < 1e-12);

    let fx = SpectralFriction::new(model, grid, Vector::axis(0))
        .unwrap()
        .estimate(1.5)
        .unwrap();
    let fy = SpectralFriction::new(model, grid, Vector::axis(1))
        .unwrap()
        .estimate(1.5)
        .unwrap();
    assert!((fx.parallel - fy.parallel).abs() < 1e-12 * fx.parallel.abs());
    assert!(fx.parallel < 0.0);
}

#[test]
fn supercritical_wave_trails_the_particle() {
    let model = Model::new(
        ModelParams::b_model(1.0),
        PotentialSpec::gaussian(1.0, 1.0),
        PotentialSpec::gaussian(1.0, 1.0),
    )
    .unwrap();
    let grid = Grid::new(64, 32.0).unwrap();
    // Default absorption; much weaker damping lets the wake wrap around the box.
    let wave = traveling_profile(&model, &grid, Vector::new(2.0, 0.0, 0.0), 0.6).unwrap();
    let wake = wake_asymmetry(&wave).unwrap();
    assert!(wake.ratio >= 10.0, "{wake:?}");
}

fn run_to(model: &Model<f64>, grid: Grid, dt: f64, t: f64) -> SimState<f64> {
    let integ = Integrator::new(*model, grid, dt, None).unwrap();
    let mut s = SimState::dressed(model, grid, Vector::zero()).unwrap();
    s.p = Vector::new(0.4, 0.15, 0.0);
    for _ in 0..(t / dt).round() as usize {
        integ.step_in_place(&mut s).unwrap();
    }
    s
}

#[test]
fn integrator_is_second_order_in_time() {
    let model = e_model(2.0, 1.0);
    let grid = Grid::new(16, 12.0).unwrap();
    let reference = run_to(&model, grid, 0.0125, 2.0);
    let err = |dt| (run_to(&model, grid, dt, 2.0).x - reference.x).norm();
    let (e1, e2) = (err(0.2), err(0.1));
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.3, "order {order}, errors {e1:e} {e2:e}");
}

#[test]
fn uncoupled_particle_moves_freely() {
    // The field is unsourced only in the E-model normalization.
    let model = e_model(1.0, 0.0);
    let grid = Grid::new(16, 12.0).unwrap();
    let integ = Integrator::new(model, grid, 0.05, None).unwrap();
    let p = Vector::new(0.3, -0.2, 0.1);
    let x0 = Vector::new(0.5, 0.0, -1.0);
    let start = SimState::vacuum(grid, x0, p);
    let cfg = EvolveConfig {
        t_max: 5.0,
        record_interval: 1.0,
        r_obs: 1.0,
    };
    let (traj, end) = evolve(&integ, start, &cfg).unwrap();
    let m = model.params.particle_mass;
    assert!((end.x - (x0 + p * (5.0 / m))).norm() < 1e-12);
    assert!(traj.momenta.iter().all(|q| (*q - p).norm() == 0.0));
    assert!(traj.deviations.iter().all(|d| *d == 0.0));
}

/// Narrow-band Gaussian packet of carrier wavenumber `k0` along x.
fn packet(grid: Grid, k0: f64) -> Field {
    Field::from_position_fn(grid, |x| Complex64::from_polar((-x.norm_sq() / 32.0).exp(), k0 * x.x()))
}

#[test]
fn sponge_absorbs_an_outgoing_packet() {
    // The field is unsourced only in the E-model normalization.
    let model = e_model(1.0, 0.0);
    let grid = Grid::new(64, 48.0).unwrap();
    let sponge = SpongeConfig::standard(&grid);
    let integ = Integrator::new(model, grid, 0.05, Some(sponge)).unwrap();
    let k0 = 2.0;
    let start = SimState::new(grid, Vector::zero(), Vector::zero(), &packet(grid, k0)).unwrap();
    let before = start.beta().l2_norm();
    // One pass from the centre through the absorbing shell and back.
    let cfg = EvolveConfig {
        t_max: grid.length / k0,
        record_interval: 1.0,
        r_obs: 1.0,
    };
    let (_, end) = evolve(&integ, start, &cfg).unwrap();
    let ratio = before / end.beta().l2_norm();
    assert!(ratio >= 100.0, "attenuation {ratio}");
}

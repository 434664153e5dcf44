use crystal_tc0::crystal::{random_cell, FracUnitCell};
use crystal_tc0::egnn::{
    egnn_forward, egnn_layer, embed, init_params, pairwise_message, EgnnConfig, EvalOptions, Mode, Params,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(n: usize, mode: Mode, seed: u64) -> (EgnnConfig, Params, FracUnitCell) {
    let cfg = EgnnConfig::new(n, 3, 8, 4, 2, mode, 24, seed);
    let params = init_params(&cfg, seed);
    let cell = random_cell(&mut ChaCha8Rng::seed_from_u64(seed + 100), n, 3);
    (cfg, params, cell)
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn golden_checksum_for_seed_zero() {
    let cfg = EgnnConfig::new(4, 3, 8, 4, 2, Mode::Real, 24, 0);
    let a = init_params(&cfg, 0);
    assert_eq!(a.checksum(), init_params(&cfg, 0).checksum());
    assert_ne!(a.checksum(), init_params(&cfg, 1).checksum());
    assert_eq!(a.checksum(), "90a9d13824431aea24a539c9ceec2923be50640551e47633da41362e032b6fe5");
}

#[test]
fn permutation_is_bit_exact_in_fpn_mode() {
    let (cfg, params, cell) = setup(5, Mode::Fpn, 3);
    let perm = [3, 0, 4, 1, 2];
    let base = egnn_forward(&cfg, &params, &cell, EvalOptions::default()).unwrap();
    let moved = egnn_forward(&cfg, &params, &cell.permuted(&perm), EvalOptions::default()).unwrap();
    let (be, me) = (base.exact.unwrap(), moved.exact.unwrap());
    for (new_col, &old_col) in perm.iter().enumerate() {
        assert_eq!(me[new_col * cfg.d..(new_col + 1) * cfg.d], be[old_col * cfg.d..(old_col + 1) * cfg.d]);
    }
}

#[test]
fn thread_count_does_not_change_fpn_output() {
    let (cfg, params, cell) = setup(4, Mode::Fpn, 9);
    let one = egnn_forward(&cfg, &params, &cell, EvalOptions { threads: Some(1) }).unwrap();
    let eight = egnn_forward(&cfg, &params, &cell, EvalOptions { threads: Some(8) }).unwrap();
    assert_eq!(one, eight);
}

#[test]
fn fpn_tracks_real_mode() {
    for seed in 0..5 {
        let (cfg, params, cell) = setup(4, Mode::Real, seed);
        let real = egnn_forward(&cfg, &params, &cell, EvalOptions::default()).unwrap();
        let fpn_cfg = EgnnConfig { mode: Mode::Fpn, ..cfg.clone() };
        let fpn = egnn_forward(&fpn_cfg, &params, &cell, EvalOptions::default()).unwrap();
        let dev = max_abs_diff(&real.values, &fpn.values);
        assert!(dev <= 1e-4, "seed {seed}: deviation {dev}");
    }
}

#[test]
fn forward_is_two_layers_over_the_embedding() {
    let (cfg, params, cell) = setup(4, Mode::Real, 11);
    let h0 = embed(&cfg, &params, &cell).unwrap();
    let h1 = egnn_layer(&cfg, &params, &h0, &cell).unwrap();
    let h2 = egnn_layer(&cfg, &params, &h1, &cell).unwrap();
    let out = egnn_forward(&cfg, &params, &cell, EvalOptions::default()).unwrap();
    assert_eq!(out.values, h2);
}

#[test]
fn single_atom_layer_uses_its_self_message() {
    let (cfg, params, cell) = setup(1, Mode::Real, 5);
    let h0 = embed(&cfg, &params, &cell).unwrap();
    let msg = pairwise_message(&cfg, &params, &h0, &cell, 0, 0).unwrap();
    let mut upd_in: Vec<f64> = h0.column(0).iter().copied().collect();
    upd_in.extend(msg.iter());
    let upd = crystal_tc0::egnn::mlp_eval(&params.phi_upd, &upd_in, None).unwrap();
    let y = egnn_layer(&cfg, &params, &h0, &cell).unwrap();
    for r in 0..cfg.d {
        assert_eq!(y[(r, 0)], h0[(r, 0)] + upd[r]);
    }
}

#[test]
fn zero_weights_give_zero_output() {
    let (cfg, _, cell) = setup(3, Mode::Fpn, 2);
    let out = egnn_forward(&cfg, &Params::zeros(&cfg), &cell, EvalOptions::default()).unwrap();
    assert!(out.values.iter().all(|&v| v == 0.0));
}

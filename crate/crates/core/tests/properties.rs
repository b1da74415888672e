use flowlab::approx::{lp_distance, volume_floor_check, DomainSpec};
use flowlab::ensemble::{span_rank, Ensemble};
use flowlab::family::{Activation, ControlFamily, WeightStructure};
use flowlab::flow::{integrate, integrate_with_jacobian, random_confined_schedule, ControlSchedule, FlowOptions};
use flowlab::liealg::{lie_closure, Membership};
use flowlab::polyvec::{parse_field, PolyVectorField};
use flowlab::trainer::{affine_least_squares_residual, fit_points, train, Dataset, OptimizerConfig, TrainConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn one_d(terms: &[(i32, u32)]) -> PolyVectorField {
    let body: String = terms.iter().map(|(c, e)| format!("{c:+}*x1^{e}")).collect();
    parse_field(&format!("({body})")).unwrap()
}

fn arb_generators() -> impl Strategy<Value = Vec<PolyVectorField>> {
    let term = (prop_oneof![-3i32..=-1, 1i32..=3], 0u32..=4);
    prop::collection::vec(prop::collection::vec(term, 1..=2), 2..=3)
        .prop_map(|gens| gens.iter().map(|t| one_d(t)).collect())
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn closure_grows_with_its_caps(gens in arb_generators(), deg in 2u32..=5, depth in 1u32..=3) {
        let small = lie_closure(&gens, deg, depth).unwrap();
        for (d2, k2) in [(deg + 1, depth), (deg, depth + 1)] {
            let big = lie_closure(&gens, d2, k2).unwrap();
            for f in small.basis() {
                prop_assert!(big.contains(&f).unwrap().is_member());
            }
        }
    }

    #[test]
    fn closure_is_deterministic_and_round_trips(gens in arb_generators()) {
        let a = lie_closure(&gens, 6, 4).unwrap();
        let b = lie_closure(&gens, 6, 4).unwrap();
        prop_assert_eq!(a.serialize_basis(), b.serialize_basis());
        for f in a.basis() {
            match a.contains(&f).unwrap() {
                Membership::Member(c) => prop_assert_eq!(a.reconstruct(&c), f),
                other => prop_assert!(false, "{other:?}"),
            }
        }
    }

    #[test]
    fn sampled_span_rank_behaves(n in 1usize..=5, seed in 0u64..1000, m in 1usize..=6) {
        let net = ControlFamily::resnet(2, Activation::Tanh, WeightStructure::Full).unwrap();
        let x = Ensemble::random(n, 2, seed, -1.0, 1.0).unwrap();
        let few = span_rank(&net, &x, seed, m, 1e-8).unwrap();
        let more = span_rank(&net, &x, seed, 2 * m, 1e-8).unwrap();
        prop_assert!(more.achieved_rank >= few.achieved_rank);
        prop_assert!(more.achieved_rank <= 2 * n);

        let perm: Vec<usize> = (0..n).rev().collect();
        let swapped = span_rank(&net, &x.permuted(&perm).unwrap(), seed, 2 * m, 1e-8).unwrap();
        prop_assert_eq!(swapped.achieved_rank, more.achieved_rank);

        let lin = ControlFamily::resnet(2, Activation::Identity, WeightStructure::Full).unwrap();
        let r = span_rank(&lin, &x, seed, 24, 1e-8).unwrap();
        prop_assert!(r.achieved_rank <= (2 * n).min(6));
    }

    #[test]
    fn flows_compose_and_invert(seed in 0u64..1000, x0 in prop::array::uniform2(-1.0f64..1.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = ControlFamily::resnet(2, Activation::Tanh, WeightStructure::Full).unwrap();
        let a = ControlSchedule::random(&fam, 3, 0.75, 1.0, &mut rng).unwrap();
        let b = ControlSchedule::random(&fam, 2, 0.5, 1.0, &mut rng).unwrap();
        let opts = FlowOptions::default();
        let mid = integrate(&fam, &a, &x0, &opts).unwrap().endpoint;
        let two = integrate(&fam, &b, &mid, &opts).unwrap().endpoint;
        let one = integrate(&fam, &a.then(&b), &x0, &opts).unwrap().endpoint;
        prop_assert!(sup(&one, &two) < 1e-10);

        let aff = ControlFamily::cubic_quadratic();
        let s = ControlSchedule::random(&aff, 3, 0.6, 0.5, &mut rng).unwrap();
        let y = integrate(&aff, &s, &[x0[0] / 2.0], &opts).unwrap();
        prop_assume!(!y.blew_up);
        let back = integrate(&aff, &s.reversed(&aff), &y.endpoint, &opts).unwrap().endpoint;
        prop_assert!((back[0] - x0[0] / 2.0).abs() < 1e-6);
    }

    #[test]
    fn divergence_free_flows_keep_volume(seed in 0u64..1000, t in 0.5f64..2.0) {
        let fam = ControlFamily::volume_preserving();
        let opts = FlowOptions::with_step(1e-2);
        let probes = vec![vec![0.0, 0.0], vec![0.5, -0.5], vec![-0.8, 0.3]];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_confined_schedule(&fam, 4, t, 1.0, &probes, 3.0, &opts, 50, &mut rng).unwrap();
        prop_assume!(s.is_some());
        let s = s.unwrap();
        for p in &probes {
            let r = integrate_with_jacobian(&fam, &s, p, &opts).unwrap();
            prop_assert!(r.logdet.unwrap().abs() < 1e-6);
        }
        prop_assert!(volume_floor_check(&s, 1e-2).unwrap().floor_respected);
    }

    #[test]
    fn jacobian_matches_differences(seed in 0u64..1000, x0 in prop::array::uniform2(-1.0f64..1.0)) {
        let fam = ControlFamily::resnet(2, Activation::Sigmoid, WeightStructure::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = ControlSchedule::random(&fam, 3, 1.0, 1.0, &mut rng).unwrap();
        let opts = FlowOptions::default();
        let jac = integrate_with_jacobian(&fam, &s, &x0, &opts).unwrap().jacobian.unwrap();
        let h = 1e-5;
        for j in 0..2 {
            let shifted = |delta: f64| {
                let mut x = x0;
                x[j] += delta;
                integrate(&fam, &s, &x, &opts).unwrap().endpoint
            };
            let (up, down) = (shifted(h), shifted(-h));
            for i in 0..2 {
                let fd = (up[i] - down[i]) / (2.0 * h);
                prop_assert!((fd - jac[i][j]).abs() <= 1e-4 * fd.abs().max(jac[i][j].abs()).max(1e-2));
            }
        }
    }

    #[test]
    fn linear_networks_stay_above_the_affine_fit(seed in 0u64..1000) {
        let fam = ControlFamily::resnet(2, Activation::Identity, WeightStructure::Full).unwrap();
        let data = Dataset::random(4, 2, seed, -1.0, 1.0).unwrap();
        let cfg = TrainConfig {
            num_segments: 3,
            segment_duration: 0.5,
            seed,
            optimizer: OptimizerConfig { max_iters: 60, learning_rate: 5e-2, ..OptimizerConfig::default() },
            ..TrainConfig::default()
        };
        let r = train(&fam, &cfg, &data).unwrap();
        let floor = affine_least_squares_residual(data.inputs.points(), data.targets.points());
        prop_assert!(r.best_loss_history.iter().all(|&l| l >= floor - 1e-6));
        prop_assert!(r.best_loss_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(&train(&fam, &cfg, &data).unwrap().loss_history, &r.loss_history);
    }

    #[test]
    fn trained_volume_preserving_flows_respect_the_floor(seed in 0u64..1000) {
        let fam = ControlFamily::volume_preserving();
        let inputs: Vec<Vec<f64>> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 6.0;
                vec![0.7 * a.cos(), 0.7 * a.sin()]
            })
            .collect();
        let targets = vec![vec![0.0, 0.0]; 6];
        let cfg = TrainConfig {
            num_segments: 4,
            segment_duration: 0.25,
            seed,
            optimizer: OptimizerConfig { max_iters: 40, ..OptimizerConfig::default() },
            ..TrainConfig::default()
        };
        let r = fit_points(&fam, &cfg, &inputs, &targets).unwrap();
        let v = volume_floor_check(&r.final_params, 1e-2).unwrap();
        prop_assert!(v.floor_respected);
    }

    #[test]
    fn lp_distance_is_a_metric_restriction(
        m in prop::array::uniform4(-2.0f64..2.0),
        p in 1.0f64..4.0,
        res in 5usize..30,
    ) {
        let rule = DomainSpec::square(1.0, res).rule().unwrap();
        let f = |x: &[f64]| Some(vec![m[0] * x[0] + m[1] * x[1], m[2] * x[0] * x[1] + m[3]]);
        let g = |x: &[f64]| Some(vec![x[1], x[0]]);
        let fg = lp_distance(&rule, f, g, p).unwrap();
        let gf = lp_distance(&rule, g, f, p).unwrap();
        prop_assert!((fg.error - gf.error).abs() <= 1e-12 * fg.error.max(1.0));
        prop_assert_eq!(lp_distance(&rule, f, f, p).unwrap().error, 0.0);

        let l1 = lp_distance(&rule, f, g, 1.0).unwrap().normalized_error;
        let l2 = lp_distance(&rule, f, g, 2.0).unwrap().normalized_error;
        prop_assert!(l1 <= l2 * (1.0 + 1e-12));
    }

    #[test]
    fn refining_the_grid_barely_moves_the_error(m in prop::array::uniform4(-2.0f64..2.0)) {
        let f = |x: &[f64]| Some(vec![m[0] * x[0].sin() + m[1] * x[1], m[2] * x[0] + m[3] * (x[1] * x[0]).cos()]);
        let zero = |_: &[f64]| Some(vec![0.0, 0.0]);
        let coarse = lp_distance(&DomainSpec::square(1.0, 51).rule().unwrap(), f, zero, 1.0).unwrap().error;
        let fine = lp_distance(&DomainSpec::square(1.0, 101).rule().unwrap(), f, zero, 1.0).unwrap().error;
        prop_assume!(fine > 1e-3);
        prop_assert!((coarse - fine).abs() < 0.02 * fine);
    }
}

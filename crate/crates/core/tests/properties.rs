use pleiolv_core::dist::{sample_interval_normal, sample_truncated_normal, Side};
use pleiolv_core::model::{LongitudinalFamilyDataset, ParamLayout};
use pleiolv_core::rng::{Purpose, RngHandle, StreamId};
use pleiolv_core::sampler::run_chain;
use pleiolv_core::sampler::ExpandedState;
use pleiolv_core::selection::{inclusion_probability, select_phenotypes, SelectionRule};
use pleiolv_core::simgen::{simulate, Scenario, SimDesign};
use pleiolv_core::{ModelData, PriorConfig, SamplerConfig, Scheme};
use proptest::prelude::*;

fn small(scenario: Scenario, families: usize, seed: u64) -> LongitudinalFamilyDataset {
    let mut d = SimDesign::scenario(scenario);
    d.n_families = families;
    let mut rng = RngHandle::new(seed, StreamId::new(Purpose::Simulate)).rng();
    simulate(&d, &mut rng).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flatten_round_trips(seed in 0u64..1000, families in 1usize..6) {
        let ds = small(Scenario::S5_3a, families, seed);
        let cells = ds.flatten_index();
        prop_assert_eq!(cells.len(), ds.n_records() * ds.phenotypes.len());
        prop_assert_eq!(ds.from_cells(&cells), ds);
    }

    #[test]
    fn imputation_is_idempotent(seed in 0u64..1000, holes in prop::collection::vec(any::<u32>(), 1..20)) {
        let mut ds = small(Scenario::S5_1, 40, seed);
        let j = ds.phenotypes.len();
        for h in holes {
            let h = h as usize;
            let fam = &mut ds.families[h % 40];
            let ind = h / 40 % fam.individuals.len();
            let recs = &mut fam.individuals[ind].records;
            // Keep the first time point so no series is entirely missing.
            let t = 1 + h / 7 % (recs.len() - 1);
            recs[t].y[h / 3 % j] = None;
        }
        prop_assert!(ds.has_missing());
        prop_assert!(ds.validate().passed());
        let once = ds.impute_missing().unwrap();
        prop_assert!(!once.has_missing());
        prop_assert!(once.validate().passed());
        prop_assert_eq!(once.impute_missing().unwrap(), once.clone());
        for (a, b) in ds.records().zip(once.records()) {
            for k in 0..j {
                prop_assert_eq!(a.y[k].is_none(), b.imputed[k]);
                if let Some(v) = a.y[k] {
                    prop_assert_eq!(b.y[k], Some(v));
                }
            }
        }
        for (k, p) in once.phenotypes.iter().enumerate() {
            if p.kind == pleiolv_core::PhenotypeKind::Binary {
                prop_assert!(once.records().all(|r| matches!(r.y[k], Some(v) if v == 0.0 || v == 1.0)));
            }
        }
    }

    #[test]
    fn expansion_leaves_original_parameters_unchanged(
        psi2 in 0.05f64..20.0,
        xi in prop::collection::vec(0.1f64..5.0, 5),
        seed in 0u64..100,
    ) {
        let ds = small(Scenario::S5_2, 30, seed);
        let data = ModelData::new(&ds).unwrap();
        let truth = SimDesign::scenario(Scenario::S5_2).truth;
        let base = ExpandedState::from_original(&truth, &data);
        let mut s = base.clone();
        let psi = psi2.sqrt();
        s.psi2 = psi2;
        s.lambda_star.iter_mut().for_each(|l| *l /= psi);
        s.alpha_star.iter_mut().for_each(|a| *a *= psi);
        s.sigma_a_star *= psi2;
        s.sigma_d_star *= psi2;
        for (k, &x) in xi.iter().enumerate().take(s.xi.len()) {
            s.xi[k] = x;
            s.beta0_star[k] /= x;
            s.eta2[k] /= x * x;
        }
        let layout = ParamLayout::new(data.dims);
        let a = base.to_original().to_values(&layout);
        let b = s.to_original().to_values(&layout);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(*x, *y), "{x} vs {y}");
        }
    }

    #[test]
    fn parameter_vector_round_trips(seed in 0u64..1000) {
        let ds = small(Scenario::S5_3b, 40, seed);
        let data = ModelData::new(&ds).unwrap();
        let layout = ParamLayout::new(data.dims);
        let truth = SimDesign::scenario(Scenario::S5_3b).truth;
        let v = truth.to_values(&layout);
        prop_assert_eq!(v.len(), layout.n_params());
        let back = pleiolv_core::ParameterSet::from_values(&layout, &v).unwrap();
        prop_assert_eq!(back.to_values(&layout), v);
    }

    #[test]
    fn truncated_normals_respect_support(mu in -40.0f64..40.0, sigma in 0.01f64..10.0, seed: u64) {
        let mut rng = RngHandle::raw(seed, 0).rng();
        for _ in 0..20 {
            prop_assert!(sample_truncated_normal(mu, sigma, Side::Positive, &mut rng) > 0.0);
            prop_assert!(sample_truncated_normal(mu, sigma, Side::Negative, &mut rng) <= 0.0);
            let x = sample_interval_normal(mu, sigma, -1.0, 2.0, &mut rng);
            prop_assert!((-1.0..=2.0).contains(&x));
        }
    }

    #[test]
    fn threshold_selection_is_monotone(
        probs in prop::collection::vec(0.0f64..=1.0, 1..12),
        lo in 0.0f64..=1.0,
        hi in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let wide = select_phenotypes(&probs, SelectionRule::Threshold(lo));
        let narrow = select_phenotypes(&probs, SelectionRule::Threshold(hi));
        prop_assert!(narrow.iter().all(|j| wide.contains(j)));
        prop_assert!(wide.windows(2).all(|w| w[0] < w[1]));
        let fdr = select_phenotypes(&probs, SelectionRule::Fdr(0.1));
        let selected: Vec<f64> = fdr.iter().map(|&j| 1.0 - probs[j]).collect();
        if !selected.is_empty() {
            prop_assert!(selected.iter().sum::<f64>() / selected.len() as f64 <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn inclusion_probability_is_a_frequency(omega in prop::collection::vec(prop::bool::ANY, 1..100)) {
        let v: Vec<f64> = omega.iter().map(|&b| b as u8 as f64).collect();
        let p = inclusion_probability(&v);
        let hits = omega.iter().filter(|&&b| b).count();
        prop_assert!(close(p, hits as f64 / omega.len() as f64));
    }
}

#[test]
fn chains_are_reproducible_per_stream() {
    let ds = small(Scenario::S5_3a, 30, 9);
    let mixed = ModelData::new(&ds).unwrap();
    let continuous = ModelData::new(&ds.select_phenotypes(&[0, 1, 2, 3])).unwrap();
    for scheme in [Scheme::Sg, Scheme::PxHc, Scheme::AcPxHc, Scheme::Px2Hc] {
        let data = if scheme.supports_binary() { &mixed } else { &continuous };
        let priors = PriorConfig::default().with_spike_slab(data.dims.j, 1.0, 1.0);
        let cfg = SamplerConfig::new(scheme, 60, 10);
        let stream = StreamId::new(Purpose::Fit).replicate(2);
        let a = run_chain(data, &priors, &cfg, RngHandle::new(5, stream)).unwrap();
        let b = run_chain(data, &priors, &cfg, RngHandle::new(5, stream)).unwrap();
        let c = run_chain(data, &priors, &cfg, RngHandle::new(5, stream.chain(1))).unwrap();
        assert_eq!(a.values, b.values, "{scheme}");
        assert_ne!(a.values, c.values, "{scheme}");
        for j in 0..data.dims.j {
            let lambda = a.column(&format!("lambda_{}", j + 1)).unwrap();
            assert!(lambda.iter().all(|&l| l >= 0.0));
        }
    }
}

//! Property tests for operator, stepper and I/O invariants.

use klausmeier::analysis::{equilibria, kinetic_residual, lemma21_identity_residuals};
use klausmeier::grid::{linf_norm, make_grid, Field, GridSpec};
use klausmeier::io::config::{
    parse_config, ControlConfig, GridConfig, InitialCondition, KernelConfig, OutputConfig,
    RunConfig,
};
use klausmeier::io::snapshot::{read_csv, read_raw, write_csv, write_raw, FieldName, OutputFormat};
use klausmeier::kernel::{build_kernel, DiscreteKernel, KernelSpec, NonlocalMethod};
use klausmeier::localop::laplacian_neumann;
use klausmeier::reaction::{ModelMode, ModelParams};
use klausmeier::stepper::{Integrator, MemorySink, SimState, StepControl};
use proptest::prelude::*;

fn field_strategy(g: GridSpec, lo: f64, hi: f64) -> impl Strategy<Value = Field> {
    prop::collection::vec(lo..hi, g.len()).prop_map(move |v| Field::new(g, v).unwrap())
}

fn small_grid() -> GridSpec {
    make_grid(8.0, 8.0, 16, 16).unwrap()
}

fn small_kernel() -> DiscreteKernel {
    build_kernel(&small_grid(), &KernelSpec::gaussian(1.0)).unwrap()
}

/// The five-point Laplacian written as a kernel stencil.
fn five_point_kernel(g: &GridSpec) -> DiscreteKernel {
    let w = 1.0 / (g.hx() * g.hx());
    DiscreteKernel::from_stencil(g, 1, 1, vec![0.0, w, 0.0, w, 0.0, w, 0.0, w, 0.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        u in field_strategy(small_grid(), -1.0, 1.0),
        v in field_strategy(small_grid(), -1.0, 1.0),
    ) {
        let k = small_kernel();
        let combo = u.zip_map(&v, |x, y| a * x + b * y).unwrap();
        let lhs = k.apply_direct(&combo).unwrap();
        let gu = k.apply_direct(&u).unwrap();
        let gv = k.apply_direct(&v).unwrap();
        for ((l, x), y) in lhs.values().iter().zip(gu.values()).zip(gv.values()) {
            prop_assert!((l - (a * x + b * y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn gamma_bounds_and_conservation(z in field_strategy(small_grid(), -5.0, 5.0)) {
        let k = small_kernel();
        let g = k.apply_direct(&z).unwrap();
        let zmax = linf_norm(&z);
        prop_assert!(linf_norm(&g) <= 2.0 * k.lambda_disc() * zmax * (1.0 + 1e-12));
        prop_assert!(k.integral_of_gamma(&z).unwrap().abs() <= 1e-9 * zmax * small_grid().area());
    }

    #[test]
    fn fft_matches_direct(z in field_strategy(small_grid(), -1.0, 1.0)) {
        let k = small_kernel();
        let a = k.apply_direct(&z).unwrap();
        let b = k.apply_fft(&z).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn five_point_kernel_reproduces_the_laplacian(z in field_strategy(small_grid(), -1.0, 1.0)) {
        let g = small_grid();
        let k = five_point_kernel(&g);
        let a = k.apply_direct(&z).unwrap();
        let b = laplacian_neumann(&z).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn identity_residuals_stay_at_roundoff(
        v in field_strategy(small_grid(), -1.0, 1.0),
        w in field_strategy(small_grid(), -1.0, 1.0),
    ) {
        let k = small_kernel();
        let (r1, r2) = lemma21_identity_residuals(&k, &v, &w).unwrap();
        let area = small_grid().area();
        prop_assert!(r1 <= 1e-12 * linf_norm(&v) * linf_norm(&w) * area * area);
        prop_assert!(r2 >= -1e-12);
    }

    #[test]
    fn equilibria_solve_the_kinetics(alpha in 0.001f64..1.0, ratio in 1.0f64..20.0) {
        let p = ModelParams { a: 2.0 * alpha * ratio, alpha, ..ModelParams::reference_nonlocal() };
        for s in equilibria(&p).all() {
            prop_assert!(kinetic_residual(s, &p) <= 1e-12 * (1.0 + s.w * s.n * s.n));
        }
    }

    #[test]
    fn csv_and_raw_decode_to_the_same_field(z in field_strategy(small_grid(), -1e6, 1e6), t in 0.0f64..500.0) {
        let dir = tempfile::tempdir().unwrap();
        let (c, r) = (dir.path().join("z.csv"), dir.path().join("z.raw"));
        write_csv(&c, &z, t, FieldName::Biomass).unwrap();
        write_raw(&r, &z, t).unwrap();
        let from_csv = read_csv(&c).unwrap();
        let from_raw = read_raw(&r).unwrap();
        prop_assert_eq!(from_raw.t.to_bits(), t.to_bits());
        prop_assert_eq!(from_csv.t.to_bits(), t.to_bits());
        for ((a, b), orig) in from_csv.values.iter().zip(&from_raw.values).zip(z.values()) {
            prop_assert_eq!(b.to_bits(), orig.to_bits());
            let ulp = f64::from_bits(b.abs().to_bits() + 1) - b.abs();
            prop_assert!((a - b).abs() <= ulp);
        }
    }
}

fn config_strategy() -> impl Strategy<Value = RunConfig> {
    let model = (
        prop_oneof![Just(ModelMode::Local), Just(ModelMode::Nonlocal)],
        0.001f64..1.0,
        0.001f64..1.0,
        0.0f64..10.0,
        0.01f64..1.0,
        0.001f64..0.5,
    )
        .prop_filter("d1 != d2", |(_, d1, d2, ..)| d1 != d2)
        .prop_map(|(mode, d1, d2, v, a, alpha)| ModelParams {
            d1,
            d2,
            v,
            a,
            alpha,
            mode,
        });
    let grid = (10.0f64..40.0, 10.0f64..40.0, 3usize..400, 3usize..400)
        .prop_map(|(lx, ly, nx, ny)| GridConfig { lx, ly, nx, ny });
    let kernel = (
        0.05f64..2.0,
        1.0f64..5.0,
        prop_oneof![
            Just(NonlocalMethod::Auto),
            Just(NonlocalMethod::Direct),
            Just(NonlocalMethod::Fft)
        ],
    )
        .prop_map(|(sigma, cutoff_radii, method)| KernelConfig {
            sigma,
            cutoff_radii,
            method,
        });
    let control = (
        prop::option::of(1e-6f64..1e-1),
        0.0f64..1000.0,
        0.01f64..=1.0,
        1u64..100_000,
    )
        .prop_map(|(dt, t_end, safety, snapshot_stride)| ControlConfig {
            dt,
            t_end,
            safety,
            snapshot_stride,
        });
    let initial = prop_oneof![
        Just(InitialCondition::ReferenceFormulas),
        (
            0.0f64..1.0,
            0u64..=i64::MAX as u64,
            prop::option::of(0.0f64..5.0),
            prop::option::of(0.0f64..5.0)
        )
            .prop_map(|(amplitude, seed, base_n, base_w)| {
                InitialCondition::UniformPlusNoise {
                    amplitude,
                    seed,
                    base_n,
                    base_w,
                }
            }),
        ("[a-z/ _.\"]{1,12}", "[a-z]{1,8}\\.raw").prop_map(|(n, w)| InitialCondition::FromFile {
            n_path: n.into(),
            w_path: w.into()
        }),
    ];
    let output = (
        "[a-zA-Z0-9_/\\\\ -]{1,16}",
        prop::sample::subsequence(
            vec![OutputFormat::Csv, OutputFormat::Pgm, OutputFormat::Raw],
            0..=3,
        ),
    )
        .prop_map(|(dir, formats)| OutputConfig {
            dir: dir.into(),
            formats,
        });
    (model, grid, kernel, control, initial, output).prop_map(
        |(model, grid, kernel, control, initial, output)| RunConfig {
            model,
            grid,
            kernel,
            control,
            initial,
            output,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn config_render_round_trips(cfg in config_strategy()) {
        let text = cfg.render();
        let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn empty_initial_document_produces_reference_config() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.model, ModelParams::reference_nonlocal());
}

#[test]
fn nonnegative_data_stays_nonnegative_and_water_stays_bounded() {
    let g = small_grid();
    let k = small_kernel();
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(16));
    runner
        .run(
            &(field_strategy(g, 0.0, 4.0), field_strategy(g, 0.0, 2.0)),
            |(n0, w0)| {
                let p = ModelParams::reference_nonlocal();
                let integ = Integrator::new(p, g, Some(&k), &w0).unwrap();
                let lim = klausmeier::stepper::stability_limits(&p, &g, Some(&k), &n0, &w0);
                // Rough data: transport can push biomass past the heuristic bound, so leave extra margin.
                let ctl = StepControl::auto(lim.min(), 2.0, 0.5, 25).unwrap();
                let mut sink = MemorySink::default();
                let out = integ
                    .run(SimState::new(n0, w0).unwrap(), &ctl, &mut sink)
                    .unwrap();
                for d in &out.trace {
                    prop_assert!(d.n_min >= 0.0 && d.w_min >= 0.0);
                    prop_assert!(d.w_max <= integ.water_bound() + 1e-9);
                }
                Ok(())
            },
        )
        .unwrap();
}

#[test]
fn runs_are_deterministic() {
    let g = small_grid();
    let k = small_kernel();
    let (n0, w0) = klausmeier::grid::eval_initial_conditions(&g);
    let p = ModelParams::reference_nonlocal();
    let lim = klausmeier::stepper::stability_limits(&p, &g, Some(&k), &n0, &w0);
    let ctl = StepControl::auto(lim.min(), 1.0, 0.9, 1000).unwrap();
    let run = |method| {
        let integ = Integrator::new(p, g, Some(&k), &w0)
            .unwrap()
            .with_method(method);
        let mut sink = MemorySink::default();
        integ
            .run(
                SimState::new(n0.clone(), w0.clone()).unwrap(),
                &ctl,
                &mut sink,
            )
            .unwrap()
            .final_state
    };
    let a = run(NonlocalMethod::Fft);
    let b = run(NonlocalMethod::Fft);
    assert_eq!(a, b);
    let c = run(NonlocalMethod::Direct);
    for (x, y) in a.n.values().iter().zip(c.n.values()) {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
}

#[test]
fn local_mode_matches_five_point_kernel_run() {
    let g = small_grid();
    let k = five_point_kernel(&g);
    let (n0, w0) = klausmeier::grid::eval_initial_conditions(&g);
    let local = ModelParams {
        d2: 0.003,
        ..ModelParams::reference_local()
    };
    let nonlocal = ModelParams {
        mode: ModelMode::Nonlocal,
        ..local
    };
    let dt = 1e-3;
    let ctl = StepControl::new(dt, 0.5, 1.0, 1000, 1.0).unwrap();
    let s0 = SimState::new(n0, w0.clone()).unwrap();
    let a = Integrator::new(local, g, None, &w0)
        .unwrap()
        .run(s0.clone(), &ctl, &mut MemorySink::default())
        .unwrap();
    let b = Integrator::new(nonlocal, g, Some(&k), &w0)
        .unwrap()
        .with_method(NonlocalMethod::Direct)
        .run(s0, &ctl, &mut MemorySink::default())
        .unwrap();
    for (x, y) in a
        .final_state
        .n
        .values()
        .iter()
        .zip(b.final_state.n.values())
    {
        assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
    }
}

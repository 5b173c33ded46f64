//! End-to-end acceptance run. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and exits nonzero if any fails. Pass a substring argument to
//! run only the matching criteria.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgl_core::bot::{simulate_sessions, CoalitionPolicy};
use rgl_core::coalition::{
    fit_rational, nash_threshold, run_table, solve_one_vs_n, solve_two_vs_two, verify_weenie_optimality,
    CoalitionSolution, SolveMode, SolveOptions, TwoVsTwoSolution,
};
use rgl_core::dynamics::{
    guts_game, jacob_game, jacob_game_ii, jacob_game_mega, multiplayer_fp, odd_man_payoff, odd_man_search,
    synchronous_benchmark, MultiFpOptions, OddManVariant, SymmetricGame,
};
use rgl_core::payoff::{
    alpha, alpha_closed, alpha_pseudo_bloc, beta, beta_closed, beta_pseudo_bloc, build_full_matrices, BuildOptions,
    PseudoBlocProfile,
};
use rgl_core::recursive::{
    check_attraction_above, check_transition, geometric_bound, restricted_iteration, RecursiveGameSpec,
};
use rgl_core::zerosum::{exact_minimax, fictitious_play, FpOptions};
use rgl_core::{make_grid, RuleVariant, StakedBimatrix, ThresholdProfile, WeenieStakes};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const RULES: [RuleVariant; 2] = [RuleVariant::Standard, RuleVariant::Weenie];
const STAKES: [WeenieStakes; 2] = [WeenieStakes::Doubled, WeenieStakes::AsStandard];

/// Reference rows: N, opponent value, player 1, bloc, pseudo-bloc.
const REFERENCE_TABLE: [(usize, f64, f64, f64, f64); 14] = [
    (2, 0.0132, 0.64, 0.68, 0.86),
    (3, 0.0339, 0.72, 0.76, 0.89),
    (4, 0.0516, 0.77, 0.81, 0.91),
    (5, 0.0654, 0.81, 0.84, 0.93),
    (6, 0.0753, 0.84, 0.87, 0.94),
    (7, 0.0847, 0.86, 0.88, 0.94),
    (8, 0.0909, 0.87, 0.89, 0.95),
    (9, 0.0954, 0.89, 0.91, 0.95),
    (10, 0.1007, 0.89, 0.91, 0.96),
    (11, 0.1066, 0.91, 0.92, 0.96),
    (12, 0.1074, 0.92, 0.93, 0.97),
    (13, 0.1110, 0.92, 0.93, 0.97),
    (14, 0.1154, 0.92, 0.94, 0.97),
    (15, 0.1184, 0.93, 0.94, 0.97),
];

fn one_vs_two() -> &'static CoalitionSolution {
    static SOLUTION: OnceLock<CoalitionSolution> = OnceLock::new();
    SOLUTION.get_or_init(|| {
        solve_one_vs_n(3, 101, SolveMode::Full, RuleVariant::Standard, &SolveOptions::default())
            .expect("1-v-2 solve")
    })
}

fn one_vs_two_matrices() -> StakedBimatrix {
    let grid = make_grid(101).expect("grid");
    build_full_matrices(3, &grid, RuleVariant::Standard, &BuildOptions::default()).expect("matrices")
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn closed_form() -> Outcome {
    let started = Instant::now();
    let grid = make_grid(21)?;
    let v = grid.values();
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    for &a in v {
        for &b in v {
            profiles.push(vec![a, b]);
            profiles.extend(v.iter().map(|&c| vec![a, b, c]));
        }
    }
    let mut worst: f64 = 0.0;
    for t in &profiles {
        let p = ThresholdProfile::new(t.clone())?;
        for rule in RULES {
            let general = alpha(&p, rule)?;
            for (x, y) in alpha_closed(&p, rule)?.iter().zip(&general) {
                worst = worst.max((x - y).abs());
            }
            for stakes in STAKES {
                worst = worst.max((beta_closed(&p, rule, stakes)? - beta(&p, rule, stakes)?).abs());
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Ok((worst <= 1e-12 && secs < 60.0, format!("{} profiles, max deviation {worst:.2e}", profiles.len())))
}

fn zero_sum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let n = 2 + k % 7;
        let rule = RULES[(k / 7) % 2];
        let p = ThresholdProfile::new((0..n).map(|_| rng.gen::<f64>()).collect())?;
        worst = worst.max(alpha(&p, rule)?.iter().sum::<f64>().abs());
    }
    Ok((worst <= 1e-12, format!("10^4 profiles, max |sum| {worst:.2e}")))
}

fn pseudo_bloc_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = 3 + k % 6;
        let rule = RULES[k % 2];
        let (p1, p2, bloc) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        let pb = PseudoBlocProfile::new(p1, p2, bloc, n)?;
        let mut t = vec![p1, p2];
        t.extend(std::iter::repeat(bloc).take(n - 2));
        let p = ThresholdProfile::new(t)?;
        worst = worst.max((alpha_pseudo_bloc(&pb, rule)? - alpha(&p, rule)?[0]).abs());
        for stakes in STAKES {
            worst = worst.max((beta_pseudo_bloc(&pb, rule, stakes) - beta(&p, rule, stakes)?).abs());
        }
    }
    Ok((worst <= 1e-12, format!("10^3 expanded profiles, max deviation {worst:.2e}")))
}

fn one_vs_two_value() -> Outcome {
    let s = one_vs_two();
    let bloc = s
        .decoded_support
        .iter()
        .find(|p| p.indices[1] - p.indices[0] <= 1 && within(p.thresholds.iter().sum::<f64>() / 2.0, 0.68, 0.02));
    let pseudo = s.decoded_support.iter().find(|p| p.indices[0] == 0 && within(p.thresholds[1], 0.86, 0.02));
    let ok = within(s.opponent_value, 0.013, 0.003)
        && bloc.is_some_and(|p| within(p.weight, 0.86, 0.05))
        && pseudo.is_some_and(|p| within(p.weight, 0.14, 0.05))
        && within(s.summary.player1, 0.64, 0.02);
    let show = |p: Option<&rgl_core::coalition::SupportPoint>| {
        p.map_or("missing".to_string(), |p| format!("{:?}@{:.3}", p.thresholds, p.weight))
    };
    Ok((
        ok,
        format!(
            "value {:.6}, bloc {}, pseudo {}, player 1 {}",
            s.opponent_value,
            show(bloc),
            show(pseudo),
            s.summary.player1
        ),
    ))
}

fn table_rows() -> &'static Vec<CoalitionSolution> {
    static ROWS: OnceLock<Vec<CoalitionSolution>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let sizes: Vec<usize> = (2..=8).collect();
        run_table(&sizes, 101, RuleVariant::Standard, &SolveOptions::default()).expect("table")
    })
}

fn table_one() -> Outcome {
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for (row, &(n, value, p1, bloc, pseudo)) in table_rows().iter().zip(&REFERENCE_TABLE) {
        assert_eq!(row.coalition_size(), n);
        let dv = (row.opponent_value - value).abs();
        let ds = [
            (row.summary.player1 - p1).abs(),
            row.summary.bloc.map_or(f64::INFINITY, |b| (b - bloc).abs()),
            row.summary.pseudo_bloc.map_or(f64::INFINITY, |b| (b - pseudo).abs()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let row_ok = dv <= 0.005 && ds <= 0.02 + 1e-9;
        if !row_ok {
            eprintln!(
                "    N={n}: value {:.4} vs {value}, strategies {:?}/{:?}/{:?} vs {p1}/{bloc}/{pseudo}",
                row.opponent_value, row.summary.player1, row.summary.bloc, row.summary.pseudo_bloc
            );
        }
        ok &= row_ok;
        worst = (worst.0.max(dv), worst.1.max(ds));
    }
    Ok((ok, format!("N=2..8, max value deviation {:.4}, max strategy deviation {:.3}", worst.0, worst.1)))
}

fn curve_fit() -> Outcome {
    let reference: Vec<(f64, f64)> = REFERENCE_TABLE.iter().map(|r| (r.0 as f64, r.1)).collect();
    let f = fit_rational(&reference)?;
    let computed: Vec<(f64, f64)> = table_rows().iter().map(|r| (r.coalition_size() as f64, r.opponent_value)).collect();
    let g = fit_rational(&computed)?;
    Ok((
        within(f.a, 0.163, 0.02) && f.r_squared >= 0.995,
        format!(
            "reference N=2..15: a={:.4} b={:.3} c={:.3} r2={:.5}; computed N=2..8: a={:.4} r2={:.5}",
            f.a, f.b, f.c, f.r_squared, g.a, g.r_squared
        ),
    ))
}

fn full_vs_pseudo() -> Outcome {
    let opts = SolveOptions::default();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for n in 3..=5 {
        let full = solve_one_vs_n(n, 21, SolveMode::Full, RuleVariant::Standard, &opts)?;
        let pseudo = solve_one_vs_n(n, 21, SolveMode::PseudoBloc, RuleVariant::Standard, &opts)?;
        let d = (full.opponent_value - pseudo.opponent_value).abs();
        worst = worst.max(d);
        detail.push(format!("n={n}: {:.5}/{:.5}", full.opponent_value, pseudo.opponent_value));
    }
    Ok((worst <= 2e-3, format!("{} (max diff {worst:.2e})", detail.join(", "))))
}

fn two_vs_two() -> Outcome {
    let s = solve_two_vs_two(21, RuleVariant::Standard, &SolveOptions::default())?;
    let w1 = TwoVsTwoSolution::bloc_weight(&s.first_support, 0.75, 0.8);
    let w2 = TwoVsTwoSolution::bloc_weight(&s.second_support, 0.75, 0.8);
    Ok((
        s.value.abs() <= 0.005 && within(w1, 0.95, 0.05) && within(w2, 0.95, 0.05),
        format!("value {:.5}, bloc weight in [0.75, 0.8]: {w1:.3} / {w2:.3}", s.value),
    ))
}

fn transition_rate_attraction() -> Outcome {
    let s = one_vs_two();
    let v_low = -s.opponent_value;
    let matrices = one_vs_two_matrices();
    let spec = RecursiveGameSpec::with_unit_fee(matrices.clone());
    let strategy = &s.player1_strategy;

    let transition = check_transition(&spec, strategy, -1.0, v_low)?;
    let steps = restricted_iteration(&matrices, strategy, -1.0, 300);
    let mut rate_ok = transition.epsilon > 0.0 && transition.epsilon < 1.0;
    if rate_ok {
        for (k, w) in steps.iter().enumerate() {
            let bound = geometric_bound(transition.epsilon, -1.0, v_low, k as u32)?;
            rate_ok &= (v_low - w) <= bound + 1e-12;
        }
    }
    let fp = FpOptions { max_iterations: 5_000_000, gap_tolerance: 1e-5, seed: 0, record_plays: false };
    let attraction = check_attraction_above(&spec, v_low, &[1e-3, 1e-2, 5e-2], &fp)?;

    let overshoot = StakedBimatrix::from_rows(&[vec![0.0], vec![0.0]], &[vec![0.5], vec![2.0]])?;
    let degenerate = check_attraction_above(&RecursiveGameSpec::with_unit_fee(overshoot), 0.0, &[1e-3, 1e-2], &fp)?;

    let margins: Vec<String> = attraction.probes.iter().map(|p| format!("{:.2e}", p.margin)).collect();
    Ok((
        transition.holds && rate_ok && attraction.attracting && !degenerate.attracting,
        format!(
            "transition {} (eps {:.4}), rate {}, attraction {} margins [{}], degenerate attracting={}",
            transition.holds,
            transition.epsilon,
            rate_ok,
            attraction.attracting,
            margins.join(", "),
            degenerate.attracting
        ),
    ))
}

fn weenie_optimality() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, mesh) in [(3, 1001), (4, 101), (5, 101)] {
        let scan = verify_weenie_optimality(n, mesh)?;
        let nash = nash_threshold(n, RuleVariant::Weenie)?;
        let step = 1.0 / (mesh - 1) as f64;
        let near = scan.argmin.iter().all(|t| (t - nash).abs() <= step + 1e-12);
        ok &= scan.min_value >= -1e-9 && near;
        detail.push(format!("({n},{mesh}) min {:.2e} at {:?}", scan.min_value, scan.argmin));
    }
    Ok((ok, detail.join("; ")))
}

fn guts_fp() -> Outcome {
    let mesh = 501;
    let game = guts_game(3, mesh, RuleVariant::Standard)?;
    let trace = multiplayer_fp(&game, &MultiFpOptions { iterations: 10_000, seed: 0, record_plays: true, random_openings: 1 })?;
    let target = std::f64::consts::FRAC_1_SQRT_2 * (mesh - 1) as f64;
    let worst_step = trace
        .tail(0.5)
        .iter()
        .flatten()
        .map(|&j| (j as f64 - target).abs())
        .fold(0.0, f64::max);
    let half = trace.gap_trace.len() / 2;
    let max_scaled = trace.gap_trace[half..].iter().map(|p| p.scaled_gap).fold(0.0, f64::max);
    let first_scaled = trace.gap_trace[half].scaled_gap;
    Ok((
        worst_step <= 1.0 && max_scaled.is_finite() && max_scaled <= 1.0,
        format!(
            "final-half plays within {worst_step:.2} grid steps of 1/sqrt2; G over final half max {max_scaled:.4} (at midpoint {first_scaled:.4})"
        ),
    ))
}

fn sorted_profile(game: &SymmetricGame, seed: u64, openings: u64) -> Option<Vec<usize>> {
    let t = multiplayer_fp(game, &MultiFpOptions { iterations: 10_000, seed, record_plays: true, random_openings: openings })
        .expect("fp");
    t.settled_profile(0.1).map(|mut p| {
        p.sort_unstable();
        p
    })
}

fn jacob_suite() -> Outcome {
    let seeds = 0..20u64;
    let one = jacob_game();
    let jacob_one = seeds.clone().filter(|&s| sorted_profile(&one, s, 1) == Some(vec![0, 0, 1])).count();
    let two = jacob_game_ii();
    let jacob_two = seeds.clone().filter(|&s| sorted_profile(&two, s, 30) == Some(vec![0, 1, 2])).count();

    let mega = jacob_game_mega();
    let mut mega_ok = 0;
    let mut mega_worst: f64 = 0.0;
    for seed in seeds {
        let t = multiplayer_fp(&mega, &MultiFpOptions { iterations: 100_000, seed, record_plays: false, random_openings: 30 })?;
        let mut pay: Vec<f64> = (0..3)
            .map(|j| {
                let row = mega.expected_payoffs(j, &t.distributions);
                t.distributions[j].weights().iter().zip(&row).map(|(w, v)| w * v).sum()
            })
            .collect();
        pay.sort_by(|a, b| b.total_cmp(a));
        let dev = (pay[0] - 1.0).abs().max((pay[1] - 1.0).abs());
        mega_worst = mega_worst.max(dev);
        if dev <= 0.02 {
            mega_ok += 1;
        }
    }
    Ok((
        jacob_one == 20 && jacob_two == 20 && mega_ok == 20,
        format!(
            "Jacob I {jacob_one}/20, Jacob II coalition {jacob_two}/20 (30 random openings), mega-Jacob {mega_ok}/20 at 10^5 iterations (worst member deviation {mega_worst:.4})"
        ),
    ))
}

fn odd_man_suite() -> Outcome {
    let sync = synchronous_benchmark(OddManVariant::In);
    let search_in = odd_man_search(OddManVariant::In, 50)?;
    let at_in = odd_man_payoff(OddManVariant::In, &search_in.y, &search_in.z)?.best;
    let u = [1.0 / 3.0; 3];
    let uniform_out = odd_man_payoff(OddManVariant::Out, &u, &u)?.best;
    let search_out = odd_man_search(OddManVariant::Out, 50)?;
    let at_out = odd_man_payoff(OddManVariant::Out, &search_out.y, &search_out.z)?.best;
    let ok = within(sync, -2.0 / 3.0, 1e-9)
        && within(search_in.min_value, -0.5, 1e-9)
        && within(at_in, -0.5, 1e-9)
        && within(uniform_out, 0.0, 1e-9)
        && within(search_out.min_value, 0.0, 1e-9)
        && within(at_out, 0.0, 1e-9);
    Ok((
        ok,
        format!(
            "synchronous {sync:.9}, in-search {:.9} at y={:?} z={:?}, out uniform {uniform_out:.1e}, out-search {:.1e}",
            search_in.min_value, search_in.y, search_in.z, search_out.min_value
        ),
    ))
}

fn fp_vs_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut contained = 0;
    let mut closed = 0;
    let mut worst_gap: f64 = 0.0;
    for k in 0..200u64 {
        let (r, c) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let a = ndarray::Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0));
        let fp = fictitious_play(
            a.view(),
            &FpOptions { max_iterations: 1_000_000, gap_tolerance: 1e-3, seed: k, record_plays: false },
        )?;
        let exact = exact_minimax(a.view())?.value;
        if fp.value_lower - 1e-9 <= exact && exact <= fp.value_upper + 1e-9 {
            contained += 1;
        }
        if fp.gap() <= 1e-3 {
            closed += 1;
        }
        worst_gap = worst_gap.max(fp.gap());
    }
    Ok((
        contained == 200 && closed == 200,
        format!("bracket contains exact value {contained}/200, gap <= 1e-3 {closed}/200 (worst {worst_gap:.2e})"),
    ))
}

fn bot_fairness() -> Outcome {
    let policy = Arc::new(CoalitionPolicy::from_solution(one_vs_two())?);
    let r = simulate_sessions(policy, RuleVariant::Standard, 0.64, 100_000, 0)?;
    let z = (r.mean_return + 0.013) / r.std_error;
    Ok((
        z.abs() <= 3.0,
        format!("mean {:.5}, SE {:.5}, {:.2} SE from -0.013, {:.2} rounds/session", r.mean_return, r.std_error, z, r.mean_rounds),
    ))
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("closed-form oracle equivalence", closed_form),
        ("zero-sum property", zero_sum),
        ("pseudo-bloc equivalence", pseudo_bloc_equivalence),
        ("1-v-2 value and support", one_vs_two_value),
        ("coalition table N=2..8", table_one),
        ("curve fit", curve_fit),
        ("full vs pseudo-bloc cross-check", full_vs_pseudo),
        ("2-v-2 game", two_vs_two),
        ("transition, rate and attraction", transition_rate_attraction),
        ("weenie optimality", weenie_optimality),
        ("3-player guts FP", guts_fp),
        ("Jacob suite", jacob_suite),
        ("odd-man suite", odd_man_suite),
        ("FP vs exact minimax", fp_vs_oracle),
        ("bot fairness", bot_fairness),
    ];
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        ran += 1;
        let started = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = started.elapsed().as_secs_f64();
        println!("[{}] {name}: {detail} ({secs:.1} s)", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

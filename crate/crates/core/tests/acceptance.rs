//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use kcontact::contact::{energy, legendre, verify_reeb};
use kcontact::dynamics::{assemble_sopde, verify_sopde};
use kcontact::hamiltonian::{hamiltonian_value, hdw_residual, legendre_inverse};
use kcontact::inverse::{roundtrip_check, GTerm, PdeConfig, PdeSpec};
use kcontact::models::{self, Poly2, StringParams};
use kcontact::sim::convergence::{observed_order, trace_error, DampedMode, ReferenceSolution};
use kcontact::sim::{self, energy_monitor, probe, Boundary, Grid, InitialCondition, SimTrace};
use kcontact::symmetry::{check_contact_symmetry, dissipated_quantity, dissipation_law_check, SymmetryField};
use kcontact::{evaluate_jet, LagrangianModel, PhasePoint, Result, SecondJet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RATIO: (f64, f64) = (3.5, 4.5);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn in_ratio(r: f64) -> bool {
    r >= RATIO.0 && r <= RATIO.1
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, k: usize, range: f64) -> PhasePoint {
    let c: Vec<f64> = (0..n + n * k + k).map(|_| rng.gen_range(-range..range)).collect();
    PhasePoint::from_coords(n, k, &c)
}

fn points(seed: u64, n: usize, k: usize, count: usize) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(&mut rng, n, k, 2.0)).collect()
}

fn string_params(b: f64) -> StringParams {
    StringParams::symmetric_gauge(1.0, 1.0, 0.5, 0.2, b, Poly2::default())
}

fn charged_string() -> StringParams {
    let phi = Poly2::new(vec![
        models::Monomial { px: 2, py: 0, c: 0.3 },
        models::Monomial { px: 1, py: 1, c: -0.2 },
        models::Monomial { px: 0, py: 2, c: 0.1 },
    ]);
    StringParams::symmetric_gauge(1.3, 0.8, 0.7, 0.25, 1.5, phi)
}

fn hyperregular_models() -> Vec<LagrangianModel> {
    vec![
        models::free(2, 3),
        models::membrane(1.0, 0.2),
        models::string(charged_string()),
        models::oscillator(1.5, 0.3),
        models::s_coupled(0.4),
    ]
}

/// Membrane runs shared by criteria 1, 2, 8 and 9.
struct MembraneRuns {
    model: LagrangianModel,
    coarse: SimTrace,
    fine: SimTrace,
    coarse_time: Duration,
}

fn membrane_grid(points: usize) -> Grid {
    Grid::uniform(2, 0.0, PI, points, Boundary::Dirichlet).unwrap()
}

fn membrane_run(model: &LagrangianModel, points: usize, output_every: usize) -> Result<(SimTrace, Duration)> {
    let grid = membrane_grid(points);
    let init = InitialCondition::Mode {
        field: 0,
        amplitude: 1.0,
        velocity: 0.0,
        wavenumbers: vec![1.0, 1.0],
    }
    .to_state(1, &grid)?;
    let start = Instant::now();
    let trace = sim::run(model, &grid, 0.4 * grid.spacing(0), 5.0, &init, output_every)?;
    Ok((trace, start.elapsed()))
}

fn membrane_runs() -> Result<MembraneRuns> {
    let model = models::membrane(1.0, 0.2);
    let (coarse, coarse_time) = membrane_run(&model, 101, 1)?;
    let (fine, _) = membrane_run(&model, 201, 4)?;
    Ok(MembraneRuns {
        model,
        coarse,
        fine,
        coarse_time,
    })
}

fn criterion_1(runs: &MembraneRuns) -> Result<Outcome> {
    let coarse = trace_error(
        &runs.coarse,
        &DampedMode::membrane(1.0, 0.2, 1.0, 1.0, &runs.coarse.grid),
    );
    let fine = trace_error(&runs.fine, &DampedMode::membrane(1.0, 0.2, 1.0, 1.0, &runs.fine.grid));
    let ratio = coarse / fine;
    let secs = runs.coarse_time.as_secs_f64();
    Ok(outcome(
        coarse <= 1e-3 && secs <= 60.0 && in_ratio(ratio),
        format!("error {coarse:.3e} (101^2, {secs:.1} s), {fine:.3e} (201^2), ratio {ratio:.3}"),
    ))
}

fn criterion_2(runs: &MembraneRuns) -> Result<Outcome> {
    let f = dissipated_quantity(&SymmetryField::translation_q(1, 3, 0));
    let z = PhasePoint::new(vec![0.0], vec![0.7, -0.4, 1.1], vec![0.0; 3]);
    let flux = f.eval(&runs.model, &z)?;
    let expected = [0.7, 0.4, -1.1];
    let flux_err = flux
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let coarse = dissipation_law_check(&runs.model, &f, &runs.coarse)?.max;
    let fine = dissipation_law_check(&runs.model, &f, &runs.fine)?.max;
    let ratio = coarse / fine;
    Ok(outcome(
        flux_err <= 1e-14 && in_ratio(ratio),
        format!("law residual {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3}; flux error {flux_err:.1e}"),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let model = models::membrane(1.0, 0.2);
    let pts = points(3, 1, 3, 100);
    let trans = check_contact_symmetry(&model, &SymmetryField::translation_q(1, 3, 0), &pts, 1e-9)?;
    let scale = check_contact_symmetry(&model, &SymmetryField::scaling_lift(1, 3), &pts, 1e-9)?;
    Ok(outcome(
        trans.is_symmetry && trans.max_residual <= 1e-9 && !scale.is_symmetry && scale.max_residual > 1e-3,
        format!(
            "d/du residual {:.1e}, u d/du residual {:.3e}",
            trans.max_residual, scale.max_residual
        ),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let cases = [
        models::free(2, 2),
        models::membrane(1.0, 0.2),
        models::string(charged_string()),
        models::s_coupled(0.4),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (seed, model) in cases.iter().enumerate() {
        let mut m = 0.0f64;
        for z in points(40 + seed as u64, model.n(), model.k(), 100) {
            m = m.max(verify_reeb(model, &z, 1e-5)?.max());
        }
        parts.push(format!("{} {m:.1e}", model.name()));
        worst = worst.max(m);
    }
    Ok(outcome(worst <= 1e-9, parts.join(", ")))
}

fn criterion_5() -> Result<Outcome> {
    let mut round = 0.0f64;
    let mut dual = 0.0f64;
    for (seed, model) in hyperregular_models().iter().enumerate() {
        for z in points(50 + seed as u64, model.n(), model.k(), 100) {
            let jet = evaluate_jet(model, &z)?;
            let mp = legendre(&jet, &z);
            let back = legendre_inverse(model, &mp, None)?;
            let d = back
                .coords()
                .iter()
                .zip(z.coords())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            round = round.max(d);
            let e = energy(&jet, &z);
            dual = dual.max((hamiltonian_value(model, &mp)? - e).abs() / e.abs().max(1.0));
        }
    }
    Ok(outcome(
        round <= 1e-10 && dual <= 1e-10,
        format!("inverse(legendre(z)) - z {round:.1e}, H(legendre(z)) - E {dual:.1e}"),
    ))
}

fn random_jets(rng: &mut ChaCha8Rng, k: usize, count: usize) -> Vec<SecondJet> {
    (0..count)
        .map(|_| {
            let z = random_point(rng, 1, k, 1.5);
            let mut a = vec![0.0; k * k];
            for al in 0..k {
                for be in al..k {
                    let x = rng.gen_range(-2.0..2.0);
                    a[al * k + be] = x;
                    a[be * k + al] = x;
                }
            }
            let dsdt = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
            SecondJet::new(z, a, dsdt)
        })
        .collect()
}

fn random_spec(rng: &mut ChaCha8Rng, index: usize) -> PdeSpec {
    let k = 1 + index % 3;
    let a = loop {
        let r = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
        let a = &r + r.transpose();
        if a.clone().svd(false, false).singular_values.min() > 0.2 {
            break a;
        }
    };
    let d = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = if index % 4 == 3 {
        let w = rng.gen_range(0.5..2.0);
        GTerm::Function(Arc::new(move |u| (u * w).sin()))
    } else {
        GTerm::Polynomial((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
    };
    PdeSpec::new(a, d, g)
}

fn criterion_6() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut named = Vec::new();
    for (name, cfg) in [
        ("membrane", PdeConfig::membrane(1.0, 0.2)),
        ("telegraph", PdeConfig::telegraph(1.0, 2.0)),
    ] {
        let spec = cfg.to_spec()?;
        let jets = random_jets(&mut rng, spec.k(), 50);
        named.push((name, roundtrip_check(&spec, &jets)?));
    }
    let mut random = 0.0f64;
    for index in 0..20 {
        let spec = random_spec(&mut rng, index);
        let jets = random_jets(&mut rng, spec.k(), 20);
        random = random.max(roundtrip_check(&spec, &jets)?);
    }
    let worst = named.iter().map(|(_, r)| *r).fold(random, f64::max);
    Ok(outcome(
        worst <= 1e-9,
        format!(
            "membrane {:.1e}, telegraph {:.1e}, 20 random specs {random:.1e}",
            named[0].1, named[1].1
        ),
    ))
}

fn criterion_7() -> Result<Outcome> {
    let mut regular = hyperregular_models();
    regular.push(PdeConfig::telegraph(1.0, 2.0).build()?);
    let mut worst = 0.0f64;
    for (seed, model) in regular.iter().enumerate() {
        for z in points(70 + seed as u64, model.n(), model.k(), 50) {
            let sopde = assemble_sopde(model, &z)?;
            worst = worst.max(verify_sopde(model, &z, &sopde)?.max());
        }
    }
    let gamma = 0.3;
    let damped = models::oscillator(0.0, gamma);
    let mut exact = true;
    for z in points(77, 1, 1, 100) {
        let sopde = assemble_sopde(&damped, &z)?;
        let l = damped.value(&z)?;
        exact &= sopde.gamma[0] == -gamma * z.v[0] && sopde.g[(0, 0)] == l;
    }
    Ok(outcome(
        worst <= 1e-9 && exact,
        format!("verify_sopde {worst:.1e}; k=1 coefficients exact: {exact}"),
    ))
}

fn nearest_sample(trace: &SimTrace, t: f64) -> usize {
    (0..trace.states.len())
        .min_by(|&a, &b| (trace.states[a].t - t).abs().total_cmp(&(trace.states[b].t - t).abs()))
        .unwrap()
}

fn criterion_8(runs: &MembraneRuns) -> Result<Outcome> {
    let residual = |trace: &SimTrace, j: usize| -> Result<f64> {
        Ok(hdw_residual(&runs.model, &probe::push_forward(&runs.model, trace, j)?)?.max())
    };
    let jf = runs.fine.states.len() / 2;
    let tf = runs.fine.states[jf].t;
    let jc = nearest_sample(&runs.coarse, tf);
    let tc = runs.coarse.states[jc].t;
    let coarse = residual(&runs.coarse, jc)?;
    let fine = residual(&runs.fine, jf)?;
    let ratio = coarse / fine;
    Ok(outcome(
        (tc - tf).abs() < 1e-9 && in_ratio(ratio),
        format!("hdw residual at t = {tc:.3}: {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3}"),
    ))
}

fn string_grid(points: usize) -> Grid {
    Grid::uniform(1, 0.0, PI, points, Boundary::Dirichlet).unwrap()
}

fn string_modes(grid: &Grid) -> [DampedMode; 2] {
    let p = string_params(0.0);
    [
        DampedMode::string(p.rho, p.tau, p.gamma, 0, 1.0, 1.0, grid),
        DampedMode::string(p.rho, p.tau, p.gamma, 1, 0.5, 2.0, grid),
    ]
}

fn string_run(model: &LagrangianModel, points: usize) -> Result<SimTrace> {
    let grid = string_grid(points);
    let init = InitialCondition::Mode {
        field: 0,
        amplitude: 1.0,
        velocity: 0.0,
        wavenumbers: vec![1.0],
    };
    let second = InitialCondition::Mode {
        field: 1,
        amplitude: 0.5,
        velocity: 0.0,
        wavenumbers: vec![2.0],
    };
    let state = InitialCondition::superpose(2, &grid, &[init, second])?;
    sim::run(model, &grid, 0.4 * grid.spacing(0), 5.0, &state, 1)
}

fn field_error<R: ReferenceSolution + ?Sized>(trace: &SimTrace, reference: &R, field: usize) -> f64 {
    let len = trace.grid.len();
    let mut err = 0.0f64;
    for state in &trace.states {
        for node in 0..len {
            let u = reference.value(state.t, &trace.grid.coords(node))[field];
            err = err.max((state.phi[field * len + node] - u).abs());
        }
    }
    err
}

fn criterion_9(runs: &MembraneRuns) -> Result<Outcome> {
    let membrane = probe::s_accumulation_check(&runs.model, &runs.coarse)?.relative();
    let model = models::string(string_params(1.0));
    let string = probe::s_accumulation_check(&model, &string_run(&model, 201)?)?.relative();
    Ok(outcome(
        membrane <= 1e-4 && string <= 1e-4,
        format!("relative discrepancy membrane {membrane:.2e}, string {string:.2e}"),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let decoupled = models::string(string_params(0.0));
    let mut errors = Vec::new();
    for points in [101, 201] {
        let trace = string_run(&decoupled, points)?;
        let modes = string_modes(&trace.grid);
        errors.push([field_error(&trace, &modes[..], 0), field_error(&trace, &modes[..], 1)]);
    }
    let ratios = [errors[0][0] / errors[1][0], errors[0][1] / errors[1][1]];
    let modes_ok = errors[0].iter().all(|e| *e <= 1e-3) && ratios.iter().all(|r| in_ratio(*r));

    let coupled = models::string(string_params(1.0));
    let mut h = Vec::new();
    let mut el = Vec::new();
    for points in [51, 101, 201] {
        let trace = string_run(&coupled, points)?;
        h.push(trace.grid.spacing(0));
        el.push(probe::trace_el_residual(&coupled, &trace)?.max);
    }
    let order = observed_order(&h, &el).unwrap_or(f64::NAN);
    Ok(outcome(
        modes_ok && (order - 2.0).abs() <= 0.25,
        format!(
            "B=0 errors x {:.2e}, y {:.2e}, ratios {:.3}/{:.3}; B=1 el residual order {order:.3}",
            errors[0][0], errors[0][1], ratios[0], ratios[1]
        ),
    ))
}

fn criterion_11(runs: &MembraneRuns) -> Result<Outcome> {
    let undamped = models::membrane(1.0, 0.0);
    let grid = membrane_grid(101);
    let init = InitialCondition::Mode {
        field: 0,
        amplitude: 1.0,
        velocity: 0.0,
        wavenumbers: vec![1.0, 1.0],
    }
    .to_state(1, &grid)?;
    let trace = sim::run(&undamped, &grid, 0.4 * grid.spacing(0), 10.0, &init, 1)?;
    let conserved: Vec<f64> = trace
        .states
        .iter()
        .map(|s| energy_monitor(&undamped, &grid, s))
        .collect::<Result<_>>()?;
    let e0 = conserved[0];
    let drift = conserved.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs();
    let damped: Vec<f64> = runs
        .coarse
        .states
        .iter()
        .map(|s| energy_monitor(&runs.model, &runs.coarse.grid, s))
        .collect::<Result<_>>()?;
    let rise = damped.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let monotone = rise <= 1e-14 * damped[0].abs();
    Ok(outcome(
        drift <= 1e-6 && monotone,
        format!(
            "gamma=0 relative drift {drift:.2e} over t = 10; gamma=0.2 largest step change {rise:.2e} ({:.4} -> {:.4})",
            damped[0],
            damped[damped.len() - 1]
        ),
    ))
}

fn report(label: &str, result: Result<Outcome>) -> bool {
    match result {
        Ok(o) => {
            println!("{} {label}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("FAIL {label}: error: {e}");
            false
        }
    }
}

fn main() {
    let runs = membrane_runs();
    let shared = |f: fn(&MembraneRuns) -> Result<Outcome>| match &runs {
        Ok(r) => f(r),
        Err(e) => Err(e.clone()),
    };
    let results = [
        report("1 membrane reproduction", shared(criterion_1)),
        report("2 dissipation law", shared(criterion_2)),
        report("3 symmetry checker", criterion_3()),
        report("4 reeb relations", criterion_4()),
        report("5 legendre round trip and duality", criterion_5()),
        report("6 inverse problem round trip", criterion_6()),
        report("7 sopde assembly", criterion_7()),
        report("8 hdw consistency", shared(criterion_8)),
        report("9 s-equation", shared(criterion_9)),
        report("10 string example", criterion_10()),
        report("11 undamped limit and energy decay", shared(criterion_11)),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

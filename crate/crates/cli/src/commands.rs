//! One function per subcommand. Each validates its inputs first (exit 2),
//! then runs the numerics (exit 3 on failure) and returns the CSV table.

use std::f64::consts::{FRAC_PI_2, PI};

use anyhow::Context;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use zoll::evolve::{geodesic_superposition, loschmidt, transport_experiment, EvolutionPlan, TimeScale, TUBE_WIDTH_FACTOR};
use zoll::geodesic::{self, DEFAULT_SAMPLES, DEFAULT_TOL};
use zoll::geometry::{check_phase_point, PhasePoint, RevolutionProfile, ZollSurface};
use zoll::potential::Potential;
use zoll::radon::{self, CausticScan, CriticalScan};
use zoll::spectral::band::{band_invariants, cluster_hbar, default_lmax, min_gap, EnergyWindow, GapResult, DEGENERACY_RTOL};
use zoll::spectral::basis::HarmonicBasis;
use zoll::spectral::operator::hamiltonian_matrix;
use zoll::verify::{random_unit_covector, run_suite, VerifyOptions};
use zoll::zelditch;

use crate::config::{invalid, Config};
use crate::report::{num, Csv};

/// Clusters used by the quantum subcommands when `levels` is not set.
const DEFAULT_LEVELS: &[usize] = &[20, 30, 40];

pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
}

fn bad(e: zoll::Error) -> anyhow::Error {
    invalid(e.to_string())
}

fn surface(cfg: &Config) -> anyhow::Result<ZollSurface> {
    match cfg.string("surface", "canonical").as_str() {
        "canonical" => {
            if cfg.contains("sigma") || cfg.contains("tannery_a") {
                return Err(invalid("`sigma` and `tannery_a` apply to surface = tannery only"));
            }
            Ok(ZollSurface::CanonicalSphere)
        }
        "tannery" => {
            let profile = match (cfg.f64_opt("tannery_a")?, cfg.f64_list("sigma")?) {
                (Some(a), None) => RevolutionProfile::cubic(a),
                (None, Some(odd)) => RevolutionProfile::odd(&odd),
                _ => return Err(invalid("surface = tannery needs exactly one of `tannery_a` or `sigma`")),
            };
            Ok(ZollSurface::Tannery(profile.map_err(bad)?))
        }
        other => Err(invalid(format!("config key `surface`: expected canonical or tannery, got {other:?}"))),
    }
}

fn potential(cfg: &Config) -> anyhow::Result<Potential> {
    Potential::parse_polynomial(&cfg.string("potential", "x3^2")).map_err(bad)
}

fn sphere_only(cfg: &Config) -> anyhow::Result<()> {
    match surface(cfg)? {
        ZollSurface::CanonicalSphere => Ok(()),
        _ => Err(invalid("quantum subcommands run on surface = canonical only")),
    }
}

/// Initial covector; defaults to the equator crossing at longitude 0 tilted by 30°.
fn initial_point(cfg: &Config, s: &ZollSurface) -> anyhow::Result<PhasePoint> {
    let d = PhasePoint::equator_crossing(0.0, PI / 6.0);
    let rho = PhasePoint::new(
        cfg.f64("theta", d.theta)?,
        cfg.f64("phi", d.phi)?,
        cfg.f64("p_theta", d.p_theta)?,
        cfg.f64("p_phi", d.p_phi)?,
    );
    check_phase_point(s, &rho).map_err(bad)?;
    Ok(rho)
}

fn levels(cfg: &Config) -> anyhow::Result<Vec<usize>> {
    let ls = cfg.usize_list("levels", DEFAULT_LEVELS)?;
    if ls.contains(&0) {
        return Err(invalid("config key `levels`: clusters must be >= 1"));
    }
    Ok(ls)
}

pub fn geodesic(ctx: &Ctx) -> anyhow::Result<Csv> {
    let s = surface(&ctx.cfg)?;
    let rho = initial_point(&ctx.cfg, &s)?;
    let n = ctx.cfg.count("samples", DEFAULT_SAMPLES, 2)?;
    let tol = ctx.cfg.positive("tol", DEFAULT_TOL)?;
    let g = geodesic::trajectory_with_tol(&s, &rho, n, tol).context("geodesic::trajectory")?;
    let mut csv = Csv::new("geodesic", &["s", "x1", "x2", "x3", "theta", "phi", "p_theta", "p_phi", "energy"]);
    csv.comment(format!("period {} steps {}", num(g.period), g.steps));
    for p in &g.samples {
        // Samples inside the pole margin have no standard-chart coordinates.
        let chart = p.phase_point().map(|q| q.to_array()).unwrap_or([f64::NAN; 4]);
        let mut row = vec![num(p.s)];
        row.extend(p.position.iter().map(|&x| num(x)));
        row.extend(chart.iter().map(|&x| num(x)));
        row.push(num(p.energy(&s)));
        csv.row(row);
    }
    Ok(csv)
}

pub fn radon(ctx: &Ctx) -> anyhow::Result<Csv> {
    let s = surface(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let count = ctx.cfg.count("count", 32, 1)?;
    let n = ctx.cfg.count("samples", radon::DEFAULT_SAMPLES, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let points: Vec<PhasePoint> = (0..count).map(|_| random_unit_covector(&s, &mut rng)).collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|rho| radon::radon(&s, &v, rho, n))
        .collect::<zoll::Result<_>>()
        .context("radon::radon")?;
    let mut csv = Csv::new("radon", &["theta", "phi", "p_theta", "p_phi", "n1", "n2", "n3", "radon"]);
    for (rho, val) in points.iter().zip(values) {
        let normal = radon::geodesic_normal_chart(&s, rho).unwrap_or([f64::NAN; 3]);
        let mut row: Vec<String> = rho.to_array().iter().map(|&x| num(x)).collect();
        row.extend(normal.iter().map(|&x| num(x)));
        row.push(num(val));
        csv.row(row);
    }
    Ok(csv)
}

pub fn crit(ctx: &Ctx) -> anyhow::Result<Csv> {
    let s = surface(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let r = ctx.cfg.count("resolution", 24, 16)?;
    let scan = radon::critical_scan(&s, &v, r).context("radon::critical_scan")?;
    let mut csv = Csv::new("critical", &["beta", "gamma", "theta", "phi", "p_theta", "p_phi", "residual"]);
    match scan {
        CriticalScan::Degenerate { max_residual } => {
            csv.comment(format!("degenerate: C(V) = M (max residual {})", num(max_residual)));
        }
        CriticalScan::Candidates(cands) => {
            for c in cands {
                let mut row = vec![num(c.crossing.0), num(c.crossing.1)];
                row.extend(c.rho.to_array().iter().map(|&x| num(x)));
                row.push(num(c.residual));
                csv.row(row);
            }
        }
    }
    Ok(csv)
}

pub fn caustic(ctx: &Ctx) -> anyhow::Result<Csv> {
    let s = surface(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let rho = initial_point(&ctx.cfg, &s)?;
    let grid = ctx.cfg.count("grid", 256, 8)?;
    let tol = ctx.cfg.positive("tol", DEFAULT_TOL)?;
    let scan = radon::caustic_scan(&s, &v, &rho, grid).context("radon::caustic_scan")?;
    let mut csv = Csv::new("caustic", &["s", "x1", "x2", "x3"]);
    match scan {
        CausticScan::InsideCritical { max_abs } => {
            csv.comment(format!("orbit inside Crit(L) (max |F| {})", num(max_abs)));
        }
        CausticScan::Zeros(times) => {
            let pts = geodesic::track(&s, &rho, &times, tol).context("geodesic::track")?;
            for p in pts {
                let mut row = vec![num(p.s)];
                row.extend(p.position.iter().map(|&x| num(x)));
                csv.row(row);
            }
        }
    }
    Ok(csv)
}

pub fn q0(ctx: &Ctx) -> anyhow::Result<Csv> {
    let s = surface(&ctx.cfg)?;
    let count = ctx.cfg.count("count", 9, 2)?;
    let steps = ctx.cfg.count("steps", zelditch::DEFAULT_STEPS, 64)?;
    let tilts: Vec<f64> = (0..count).map(|k| FRAC_PI_2 * k as f64 / (count - 1) as f64).collect();
    let values: Vec<f64> = tilts
        .par_iter()
        .map(|&g| zelditch::q0_with_steps(&s, &PhasePoint::equator_crossing(0.0, g), steps))
        .collect::<zoll::Result<_>>()
        .context("zelditch::q0")?;
    let mut csv = Csv::new("q0", &["tilt", "label", "q0"]);
    for (k, (g, q)) in tilts.iter().zip(values).enumerate() {
        let label = if k == 0 {
            "equator"
        } else if k + 1 == count {
            "meridian"
        } else {
            "tilted"
        };
        csv.row(vec![num(*g), label.into(), num(q)]);
    }
    Ok(csv)
}

pub fn band(ctx: &Ctx) -> anyhow::Result<Csv> {
    sphere_only(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let ls = levels(&ctx.cfg)?;
    let mut csv = Csv::new("band", &["l", "hbar", "index", "value"]);
    for l in ls {
        let hbar = cluster_hbar(l).map_err(bad)?;
        let basis = HarmonicBasis::new(l).context("spectral::basis")?;
        let inv = band_invariants(&basis, &v, l).context("spectral::band_invariants")?;
        for (i, x) in inv.iter().enumerate() {
            csv.row(vec![l.to_string(), num(hbar), i.to_string(), num(*x)]);
        }
    }
    Ok(csv)
}

pub fn gaps(ctx: &Ctx) -> anyhow::Result<Csv> {
    sphere_only(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let ls = levels(&ctx.cfg)?;
    let exponent = ctx.cfg.f64("eps_exponent", 0.5)?;
    let window = EnergyWindow::new(
        ctx.cfg.f64("window_center", 0.5)?,
        ctx.cfg.positive("window_half_width", EnergyWindow::DEFAULT_HALF_WIDTH)?,
    )
    .map_err(bad)?;
    let rtol = ctx.cfg.positive("merge_rtol", DEGENERACY_RTOL)?;
    let lmax_override = ctx.cfg.usize_opt("lmax")?;
    let mut csv = Csv::new("gaps", &["l", "hbar", "eps", "distinct", "s0", "ratio"]);
    for l in ls {
        let hbar = cluster_hbar(l).map_err(bad)?;
        let eps = hbar.powf(exponent);
        let basis = HarmonicBasis::new(lmax_override.unwrap_or(default_lmax(l))).context("spectral::basis")?;
        let h = hamiltonian_matrix(&basis, hbar, eps, &v).context("spectral::hamiltonian_matrix")?;
        let e = h.eig().context("spectral::eig")?;
        let scale = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let gap = min_gap(&e.values, window, rtol * scale).context("spectral::min_gap")?;
        let (distinct, s0) = match gap {
            GapResult::Gap { s0, distinct } => (distinct, s0),
            GapResult::NoGap { distinct } => (distinct, f64::NAN),
        };
        csv.row(vec![
            l.to_string(),
            num(hbar),
            num(eps),
            distinct.to_string(),
            num(s0),
            num(s0 / (hbar * eps * eps)),
        ]);
    }
    Ok(csv)
}

fn time_scale(cfg: &Config, default: TimeScale) -> anyhow::Result<TimeScale> {
    let tau = || cfg.positive("tau", 1.0);
    Ok(match cfg.string("time_scale", "").as_str() {
        "" => default,
        "inverse_eps_squared" => TimeScale::InverseEpsSquared,
        "hbar_over_eps_squared" => TimeScale::HbarOverEpsSquared,
        "scaled_inverse_eps_squared" => TimeScale::ScaledInverseEpsSquared(tau()?),
        "fixed" => TimeScale::Fixed(tau()?),
        other => {
            return Err(invalid(format!(
                "config key `time_scale`: expected inverse_eps_squared, hbar_over_eps_squared, \
                 scaled_inverse_eps_squared or fixed, got {other:?}"
            )))
        }
    })
}

/// Applies the shared evolution keys to a default plan.
fn plan_overrides(cfg: &Config, mut plan: EvolutionPlan, default_exponent: f64) -> anyhow::Result<EvolutionPlan> {
    let exponent = cfg.f64("eps_exponent", default_exponent)?;
    if exponent < 0.0 {
        return Err(invalid("config key `eps_exponent`: expected a non-negative number"));
    }
    plan.eps = plan.hbar.powf(exponent);
    plan.time_scale = time_scale(cfg, plan.time_scale)?;
    let t_max = match cfg.f64_opt("t_max")? {
        Some(_) => cfg.positive("t_max", 1.0)?,
        None => plan.times.last().copied().unwrap_or(1.0),
    };
    let n = cfg.count("times", plan.times.len(), 1)?;
    plan.times = zoll::evolve::linspace(0.0, t_max, n);
    if let Some(lmax) = cfg.usize_opt("lmax")? {
        plan.lmax = lmax;
    }
    Ok(plan)
}

pub fn transport(ctx: &Ctx) -> anyhow::Result<Csv> {
    sphere_only(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let n0 = ctx.cfg.vec3("normal", [3f64.sqrt() / 2.0, 0.0, 0.5])?;
    let factor = ctx.cfg.positive("tube_factor", TUBE_WIDTH_FACTOR)?;
    let mut plans = Vec::new();
    for l in levels(&ctx.cfg)? {
        let plan = plan_overrides(&ctx.cfg, EvolutionPlan::transport(l).map_err(bad)?, 0.5)?;
        plan.validate(l).map_err(bad)?;
        plans.push((l, plan));
    }
    let mut csv = Csv::new(
        "transport",
        &[
            "l", "t", "fit_n1", "fit_n2", "fit_n3", "pred_n1", "pred_n2", "pred_n3", "angle_error", "tube_mass",
            "initial_tube_mass", "leakage",
        ],
    );
    for (l, plan) in plans {
        let w = factor * plan.hbar.sqrt();
        let report = transport_experiment(&plan, &v, n0, l, w).context("evolve::transport_experiment")?;
        csv.comment(format!("l {l} tube_width {}", num(report.tube_width)));
        for r in report.rows {
            let mut row = vec![l.to_string(), num(r.t)];
            row.extend(r.fitted.iter().chain(&r.predicted).map(|&x| num(x)));
            row.extend([num(r.angle_error), num(r.tube_mass), num(r.initial_tube_mass), num(r.leakage)]);
            csv.row(row);
        }
    }
    Ok(csv)
}

pub fn echo(ctx: &Ctx) -> anyhow::Result<Csv> {
    sphere_only(&ctx.cfg)?;
    let v = potential(&ctx.cfg)?;
    let na = ctx.cfg.vec3("normal", [0.0, 0.0, 1.0])?;
    let nb = ctx.cfg.vec3("normal_b", [1.0, 0.0, 0.0])?;
    let mut plans = Vec::new();
    for l in levels(&ctx.cfg)? {
        let plan = plan_overrides(&ctx.cfg, EvolutionPlan::echo(l).map_err(bad)?, 0.7)?;
        plan.validate_echo(l).map_err(bad)?;
        plans.push((l, plan));
    }
    let sphere = ZollSurface::CanonicalSphere;
    let band_value = |n| -> anyhow::Result<f64> {
        let rho = radon::phase_point_for_normal(n).map_err(bad)?;
        radon::radon(&sphere, &v, &rho, radon::DEFAULT_SAMPLES).context("radon::radon")
    };
    let dj = band_value(nb)? - band_value(na)?;
    let mut csv = Csv::new("echo", &["l", "t", "re", "im", "abs", "predicted_abs"]);
    csv.comment(format!("radon difference {}", num(dj)));
    for (l, plan) in plans {
        // The two-circle prediction holds for the ħ/ε² time scale only.
        let predicts = plan.time_scale == TimeScale::HbarOverEpsSquared && plan.eps > 0.0;
        let basis = HarmonicBasis::new(plan.lmax).context("spectral::basis")?;
        let state = geodesic_superposition(&basis, na, nb, l).context("evolve::geodesic_superposition")?;
        let series = loschmidt(&plan, &v, &state, l).context("evolve::loschmidt")?;
        for (t, f) in series.times().iter().zip(&series.values) {
            let predicted = if predicts { (t * dj / 2.0).cos().abs() } else { f64::NAN };
            csv.row(vec![l.to_string(), num(*t), num(f.re), num(f.im), num(f.norm()), num(predicted)]);
        }
    }
    Ok(csv)
}

/// Returns the table and the number of failed checks.
pub fn verify(ctx: &Ctx) -> anyhow::Result<(Csv, usize)> {
    let samples = ctx.cfg.count("samples", VerifyOptions::default().samples, 1)?;
    let outcomes = run_suite(&VerifyOptions { seed: ctx.seed, samples });
    let mut csv = Csv::new("verify", &["check", "value", "tolerance", "passed"]);
    let mut failed = 0;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        match &o.detail {
            Some(d) => println!("{tag} {} ({d})", o.name),
            None => println!("{tag} {} {:.3e} <= {:.3e}", o.name, o.value, o.tolerance),
        }
        if !o.passed {
            failed += 1;
        }
        csv.row(vec![o.name.to_string(), num(o.value), num(o.tolerance), o.passed.to_string()]);
    }
    Ok((csv, failed))
}

//! Stage orchestration: analyze, saturate, model, verify.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::field::BivectorField;
use crate::linear::max_abs;
use crate::model::bundle::BundleChart;
use crate::model::complement::{complement_at, ComplementMode, ComplementSpec};
use crate::model::embedding::{embedding_report, CoisotropicEmbedding};
use crate::model::local::{d_eta_residual, eta_canonical, eta_on_zero_section, local_model_bivector, sigma_tau, EtaSource};
use crate::model::pre_poisson::pre_poisson_report;
use crate::model::normal_form::{compare_complements, model_radius, verify_normal_form};
use crate::model::saturation::{grid_states, saturation_chart, GridSettings};
use crate::model::tubular::{tubular_report, TubularMap};
use crate::par::Exec;
use crate::report::{Check, CloudRow, Report, Stage, Status};
use crate::sampling::{random_in_ball, rng, DomainBox};
use crate::scene::Scene;
use crate::sprayflow::dual_pair_check;
use crate::submanifold::{classify, regularity_scan, Chart, Classification};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Analyze,
    Saturate,
    Model,
    Verify,
    All,
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "analyze" => Command::Analyze,
            "saturate" => Command::Saturate,
            "model" => Command::Model,
            "verify" => Command::Verify,
            "all" => Command::All,
            _ => return Err(Error::Scene(format!("unknown command `{s}`"))),
        })
    }
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Saturate => "saturate",
            Command::Model => "model",
            Command::Verify => "verify",
            Command::All => "all",
        }
    }
}

/// Command-line overrides of scene values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub rank_tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, scene: &mut Scene) -> Result<()> {
        if let Some(s) = self.steps {
            if s < crate::sprayflow::MIN_STEPS || s % 2 != 0 {
                return Err(Error::Scene(format!("steps must be even and at least {}", crate::sprayflow::MIN_STEPS)));
            }
            scene.flow.steps = s;
        }
        if let Some(t) = self.rank_tol {
            if !(t > 0.0) {
                return Err(Error::Scene("tolerance must be positive".into()));
            }
            scene.tolerances.rank = t;
        }
        Ok(())
    }
}

pub struct RunOutput {
    pub report: Report,
    /// Named point clouds, written as `<name>.csv`.
    pub clouds: Vec<(String, Vec<CloudRow>)>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }

    pub fn write(&self, dir: &Path, csv: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json() + "\n")?;
        if csv {
            for (name, rows) in &self.clouds {
                crate::report::write_cloud(&dir.join(format!("{name}.csv")), rows)?;
            }
        }
        Ok(())
    }
}

/// Report for a scene that could not be read or built.
pub fn failed_run(scene: &str, command: &str, e: &Error) -> RunOutput {
    let mut report = Report::new(scene, command, serde_json::Value::Null);
    let mut stage = Stage::new("scene");
    stage.fail_with(Status::of_error(e), e.to_string());
    report.push(stage);
    RunOutput { report, clouds: vec![] }
}

pub fn run_path(path: &Path, command: Command, overrides: &Overrides, exec: Exec) -> RunOutput {
    let label = path.display().to_string();
    let scene = Scene::load(path).and_then(|mut s| overrides.apply(&mut s).map(|_| s));
    match scene {
        Ok(s) => run(&s, command, exec),
        Err(e) => failed_run(&label, command.name(), &e),
    }
}

struct Ctx<'a> {
    scene: &'a Scene,
    exec: Exec,
    report: Report,
    clouds: Vec<(String, Vec<CloudRow>)>,
}

impl Ctx<'_> {
    /// Run a stage; returns false when the pipeline must stop.
    fn stage(&mut self, name: &str, f: impl FnOnce(&mut Stage, &mut Vec<(String, Vec<CloudRow>)>) -> Result<()>) -> bool {
        let mut st = Stage::new(name);
        if let Err(e) = f(&mut st, &mut self.clouds) {
            st.fail_with(Status::of_error(&e), e.to_string());
        }
        let stop = matches!(st.status, Status::Prerequisite | Status::Error);
        self.report.push(st);
        !stop
    }
}

fn parameters(scene: &Scene) -> serde_json::Value {
    json!({
        "seed": scene.seed,
        "flow": scene.flow,
        "complement_mode": scene.complement.mode,
        "model": scene.model,
        "tolerances": scene.tolerances,
    })
}

pub fn run(scene: &Scene, command: Command, exec: Exec) -> RunOutput {
    let mut ctx = Ctx {
        scene,
        exec,
        report: Report::new(&scene.name, command.name(), parameters(scene)),
        clouds: vec![],
    };
    if scene.poisson.is_some() {
        let built = scene.field().and_then(|f| Ok((f, scene.chart()?, scene.complement_spec()?)));
        match built {
            Ok((field, chart, spec)) => poisson_pipeline(&mut ctx, &field, &chart, &spec, command),
            Err(e) => return failed_run(&scene.name, command.name(), &e),
        }
    }
    if scene.embedding.is_some() {
        ctx.stage("embedding", |st, _| embedding_stage(scene, st));
    }
    RunOutput {
        report: ctx.report,
        clouds: ctx.clouds,
    }
}

fn settings(scene: &Scene, exec: Exec) -> GridSettings {
    GridSettings {
        steps: scene.flow.steps,
        xi_radius: scene.flow.xi_radius,
        xi_per_axis: scene.flow.xi_per_axis,
        tol: scene.tolerances.rank,
        seed: scene.seed,
        exec,
    }
}

#[derive(Serialize)]
struct ComplementSummary {
    samples: usize,
    fiber_rank: usize,
    max_invariance: f64,
    max_intersection: f64,
    direct_sum_defect: usize,
    max_sigma: f64,
    max_tau: f64,
}

fn poisson_pipeline(ctx: &mut Ctx, field: &BivectorField, chart: &Chart, spec: &ComplementSpec, command: Command) {
    let scene = ctx.scene;
    let tol = &scene.tolerances;
    let exec = ctx.exec;
    let sub = scene.submanifold.as_ref().expect("validated");
    let mut class: Option<Classification> = None;

    // analyze
    let ok = ctx.stage("jacobi", |st, _| {
        let rep = field.certify_jacobi(tol.jacobi_samples, scene.seed, exec)?;
        st.details(&rep);
        if rep.max_residual > tol.jacobi {
            st.checks.push(Check::at_most("max_jacobi_residual", rep.max_residual, tol.jacobi));
            st.fail_with(Status::Prerequisite, "the bivector does not satisfy the Jacobi identity".into());
        } else {
            st.check(Check::at_most("max_jacobi_residual", rep.max_residual, tol.jacobi));
        }
        Ok(())
    });
    if !ok {
        return;
    }
    let ok = ctx.stage("regularity", |st, _| {
        let scan = regularity_scan(field, chart, &sub.grid, scene.seed, tol.rank, exec)?;
        let c = classify(field, chart, &sub.grid, scene.seed, tol.rank, exec)?;
        st.details(&json!({ "scan": scan, "classification": c }));
        if !scan.regular {
            st.fail_with(
                Status::Prerequisite,
                format!("not regular: TX^perp has rank between {} and {}", scan.rank_min, scan.rank_max),
            );
        }
        class = Some(c);
        Ok(())
    });
    if !ok || command == Command::Analyze {
        return;
    }
    let class = class.expect("set by the regularity stage");

    // saturate
    let grid = match scene.model_grid() {
        Ok(g) => g,
        Err(e) => {
            ctx.stage("saturation", |_, _| Err(e));
            return;
        }
    };
    let gs = settings(scene, exec);
    let ok = ctx.stage("saturation", |st, clouds| {
        let rep = saturation_chart(field, chart, spec, &grid, &gs, scene.model.full_fiber_checks)?;
        let rank_spread = (rep.max_rank - rep.min_rank) + rep.max_rank.abs_diff(rep.dim_p);
        st.check(Check::at_most("immersion_rank_defect", rank_spread as f64, 0.0));
        st.check(Check::at_most("max_poisson_residual", rep.max_poisson_residual, tol.saturation));
        st.check(Check::at_most("max_full_fiber_distance", rep.max_full_fiber_distance, tol.full_fiber));
        st.details(&json!({
            "dim_x": rep.dim_x,
            "fiber_rank": rep.fiber_rank,
            "dim_p": rep.dim_p,
            "xi_radius": rep.xi_radius,
            "min_rank": rep.min_rank,
            "max_rank": rep.max_rank,
            "samples": rep.samples.len(),
        }));
        clouds.push((
            "saturation".into(),
            rep.samples
                .iter()
                .map(|s| CloudRow {
                    u: s.u.clone(),
                    xi: s.xi.clone(),
                    x: s.y.clone(),
                    residual: s.poisson_residual,
                })
                .collect(),
        ));
        Ok(())
    });
    if !ok || command == Command::Saturate {
        return;
    }

    // model
    let ok = ctx.stage("complement", |st, _| {
        let rows = exec.map(&grid, |u| -> Result<(f64, f64, usize, f64, f64, usize)> {
            let (pd, data) = complement_at(field, chart, u, spec, tol.rank)?;
            let n = pd.pi.nrows();
            let defect = n - data.w.sum(&pd.perp, tol.rank).dim();
            let (sigma, tau) = sigma_tau(&pd, data.w0.basis());
            Ok((data.invariance_residual, data.intersection_residual, defect, sigma.max_abs(), max_abs(&tau), data.w0.dim()))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let sum = ComplementSummary {
            samples: rows.len(),
            fiber_rank: rows.first().map_or(0, |r| r.5),
            max_invariance: rows.iter().map(|r| r.0).fold(0.0, f64::max),
            max_intersection: rows.iter().map(|r| r.1).fold(0.0, f64::max),
            direct_sum_defect: rows.iter().map(|r| r.2).max().unwrap_or(0),
            max_sigma: rows.iter().map(|r| r.3).fold(0.0, f64::max),
            max_tau: rows.iter().map(|r| r.4).fold(0.0, f64::max),
        };
        st.check(Check::at_most("direct_sum_defect", sum.direct_sum_defect as f64, 0.0));
        st.check(Check::at_most("max_invariance_residual", sum.max_invariance, tol.complement));
        st.check(Check::at_most("max_intersection_residual", sum.max_intersection, tol.complement));
        st.details(&sum);
        Ok(())
    });
    if !ok {
        return;
    }
    let ok = ctx.stage("local_model", |st, _| {
        let probe: Vec<&Vec<f64>> = grid.iter().step_by((grid.len() / 3).max(1)).collect();
        let mut restriction: f64 = 0.0;
        let mut d_eta: f64 = 0.0;
        let mut radius = f64::INFINITY;
        for u in probe {
            let bc = BundleChart::new(field, chart, spec, u, tol.rank)?;
            let zero = vec![0.0; bc.rank()];
            let pd = crate::submanifold::point_data(field, chart, u, tol.rank)?;
            let (sigma, tau) = sigma_tau(&pd, &bc.frame(u)?);
            let eta0 = eta_canonical(&bc, u, &zero, scene.flow.steps)?;
            restriction = restriction.max(eta0.max_diff(&eta_on_zero_section(&sigma, &tau)));
            local_model_bivector(&bc, u, &zero, EtaSource::Canonical, scene.flow.steps)?;
            if bc.total_dim() >= 3 {
                let xi: Vec<f64> = (0..bc.rank()).map(|i| 0.25 * scene.flow.xi_radius * (1.0 + i as f64) / bc.rank() as f64).collect();
                d_eta = d_eta.max(d_eta_residual(&bc, u, &xi, scene.flow.steps, scene.model.d_eta_step)?);
            }
            radius = radius.min(model_radius(&bc, u, scene.model.probe_radius, scene.flow.xi_per_axis, scene.flow.steps)?);
        }
        st.check(Check::at_most("eta_zero_section_mismatch", restriction, tol.eta));
        st.check(Check::at_most("d_eta", d_eta, tol.eta));
        st.details(&json!({ "model_radius": radius }));
        Ok(())
    });
    if !ok || command == Command::Model {
        return;
    }

    // verify
    let ok = ctx.stage("normal_form", |st, clouds| {
        let rep = verify_normal_form(field, chart, spec, &grid, &gs)?;
        st.check(Check::at_most("max_mismatch", rep.max_mismatch, tol.normal_form));
        st.details(&json!({ "xi_radius": rep.xi_radius, "steps": rep.steps, "samples": rep.samples.len() }));
        clouds.push((
            "normal_form".into(),
            rep.samples
                .iter()
                .map(|s| CloudRow {
                    u: s.u.clone(),
                    xi: s.xi.clone(),
                    x: s.y.clone(),
                    residual: s.mismatch,
                })
                .collect(),
        ));
        Ok(())
    });
    if !ok || command == Command::Verify {
        return;
    }

    // all: the remaining checks
    ctx.stage("dual_pair", |st, _| {
        let n = chart.ambient_dim();
        let mut g = rng(scene.seed);
        let mut orth: f64 = 0.0;
        let mut rank_mismatch = 0usize;
        for u in grid.iter().take(3) {
            let pd = crate::submanifold::point_data(field, chart, u, tol.rank)?;
            let xi = random_in_ball(n, 0.5 * scene.flow.xi_radius, &mut g);
            let rep = dual_pair_check(field, chart, u, &xi, pd.perp_rank(), scene.flow.steps, tol.rank)?;
            orth = orth.max(rep.orthogonality);
            rank_mismatch = rank_mismatch.max(rep.triple_dim.abs_diff(rep.expected_triple_dim));
        }
        st.check(Check::at_most("orthogonality", orth, tol.saturation));
        st.check(Check::at_most("triple_rank_mismatch", rank_mismatch as f64, 0.0));
        Ok(())
    });
    ctx.stage("tubular", |st, _| {
        let bc = BundleChart::new(field, chart, spec, &grid[grid.len() / 2], tol.rank)?;
        let t = TubularMap::new(bc, scene.flow.steps)?;
        let rep = tubular_report(&t, 10, 0.5 * scene.flow.xi_radius, scene.seed)?;
        st.check(Check::at_most("jacobian_rank_defect", (rep.ambient_dim - rep.min_rank) as f64, 0.0));
        st.details(&rep);
        Ok(())
    });
    if class.pre_poisson {
        ctx.stage("pre_poisson", |st, _| {
            let rep = pre_poisson_report(field, chart, &grid, spec, tol.rank)?;
            st.check(Check::at_most("max_cross_term", rep.max_cross_term, tol.complement));
            st.details(&rep);
            Ok(())
        });
    }
    if spec.mode != ComplementMode::Default {
        ctx.stage("independence", |st, _| {
            let default = ComplementSpec::default();
            let bc = BundleChart::new(field, chart, spec, &grid[0], tol.rank)?;
            let states = grid_states(&grid, bc.rank(), 0.5 * scene.flow.xi_radius, scene.flow.xi_per_axis);
            let rep = compare_complements(field, chart, &default, spec, &states, scene.flow.steps, tol.rank)?;
            st.check(Check::at_most("max_difference", rep.max_difference, tol.independence));
            st.details(&rep);
            Ok(())
        });
    }
}

fn embedding_stage(scene: &Scene, st: &mut Stage) -> Result<()> {
    let g = scene.embedding.as_ref().expect("checked by caller");
    let (dim, dirac) = scene.embedding_dirac()?;
    let model = CoisotropicEmbedding::new(dirac, &vec![0.0; dim], scene.tolerances.rank)?;
    let mut r = rng(scene.seed);
    let bx = DomainBox::cube(dim, g.half_width);
    let states: Vec<(Vec<f64>, Vec<f64>)> = bx
        .random_points(g.samples, &mut r)
        .into_iter()
        .map(|u| (u, random_in_ball(model.rank(), g.half_width, &mut r)))
        .collect();
    let rep = embedding_report(&model, &states, 1e-2)?;
    st.check(Check::at_most("max_jacobi_residual", rep.max_jacobi, scene.tolerances.jacobi));
    st.check(Check::at_most("max_coisotropic_residual", rep.max_coisotropic, scene.tolerances.jacobi));
    st.check(Check::at_most("max_pullback_angle", rep.max_pullback_angle, scene.tolerances.embedding));
    st.details(&rep);
    Ok(())
}

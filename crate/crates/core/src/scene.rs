//! Scene files: TOML with expressions as quoted strings.
//!
//! ```toml
//! name = "coiso-line"
//! seed = 0
//!
//! [poisson]
//! dim = 3
//! entries = ["1 2 1"]          # "i j expr" sets pi^{ij}, and pi^{ji} = -pi^{ij}
//!
//! [submanifold]
//! params = ["u"]
//! chart = ["u", "0", "0"]
//! lo = [-1.0]
//! hi = [1.0]
//! grid = [9]
//!
//! [complement]
//! mode = "coisotropic"
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expression, VarNames};
use crate::field::BivectorField;
use crate::linear::{DiracSpace, Mat, SkewForm, RANK_TOL};
use crate::model::{ComplementMode, ComplementSpec};
use crate::sampling::DomainBox;
use crate::submanifold::Chart;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub poisson: Option<PoissonSection>,
    pub submanifold: Option<SubmanifoldSection>,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub complement: ComplementSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub embedding: Option<EmbeddingSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonSection {
    pub dim: usize,
    /// Coordinate names; defaults to `x1..xn` with the usual aliases.
    #[serde(default)]
    pub coords: Vec<String>,
    #[serde(default)]
    pub entries: Vec<String>,
    /// Half width of the coordinate box centred at the origin.
    #[serde(default = "default_box")]
    pub half_width: f64,
}

fn default_box() -> f64 {
    2.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SubmanifoldSection {
    pub params: Vec<String>,
    pub chart: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub grid: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_xi_radius")]
    pub xi_radius: f64,
    #[serde(default = "default_per_axis")]
    pub xi_per_axis: usize,
}

fn default_steps() -> usize {
    crate::sprayflow::DEFAULT_STEPS
}
fn default_xi_radius() -> f64 {
    0.2
}
fn default_per_axis() -> usize {
    3
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection {
            steps: default_steps(),
            xi_radius: default_xi_radius(),
            xi_per_axis: default_per_axis(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ComplementSection {
    #[serde(default)]
    pub mode: ComplementMode,
    /// Frame of `G`: one list of ambient components per vector, in the chart parameters.
    #[serde(default)]
    pub g: Vec<Vec<String>>,
    #[serde(default)]
    pub h: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Base grid for the model stages; defaults to the submanifold grid.
    #[serde(default)]
    pub grid: Vec<usize>,
    /// Shrink factor applied to the parameter box for the model stages.
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    /// Random full covectors per base point in the saturation check.
    #[serde(default = "default_full_fiber")]
    pub full_fiber_checks: usize,
    /// Step for the closedness check of `eta`.
    #[serde(default = "default_d_eta_step")]
    pub d_eta_step: f64,
    /// Largest fiber radius tried when probing where the model is Poisson.
    #[serde(default = "default_probe")]
    pub probe_radius: f64,
}

fn default_shrink() -> f64 {
    1.0
}
fn default_full_fiber() -> usize {
    2
}
fn default_d_eta_step() -> f64 {
    1e-2
}
fn default_probe() -> f64 {
    0.8
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            grid: vec![],
            shrink: default_shrink(),
            full_fiber_checks: default_full_fiber(),
            d_eta_step: default_d_eta_step(),
            probe_radius: default_probe(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "t_rank")]
    pub rank: f64,
    #[serde(default = "t_jacobi")]
    pub jacobi: f64,
    #[serde(default = "t_jacobi_samples")]
    pub jacobi_samples: usize,
    #[serde(default = "t_saturation")]
    pub saturation: f64,
    #[serde(default = "t_full_fiber")]
    pub full_fiber: f64,
    #[serde(default = "t_complement")]
    pub complement: f64,
    #[serde(default = "t_eta")]
    pub eta: f64,
    #[serde(default = "t_normal_form")]
    pub normal_form: f64,
    #[serde(default = "t_embedding")]
    pub embedding: f64,
    #[serde(default = "t_independence")]
    pub independence: f64,
}

fn t_rank() -> f64 {
    RANK_TOL
}
fn t_jacobi() -> f64 {
    1e-10
}
fn t_jacobi_samples() -> usize {
    1000
}
fn t_saturation() -> f64 {
    1e-8
}
fn t_full_fiber() -> f64 {
    1e-4
}
fn t_complement() -> f64 {
    1e-10
}
fn t_eta() -> f64 {
    1e-6
}
fn t_normal_form() -> f64 {
    1e-5
}
fn t_embedding() -> f64 {
    1e-8
}
fn t_independence() -> f64 {
    1e-4
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: t_rank(),
            jacobi: t_jacobi(),
            jacobi_samples: t_jacobi_samples(),
            saturation: t_saturation(),
            full_fiber: t_full_fiber(),
            complement: t_complement(),
            eta: t_eta(),
            normal_form: t_normal_form(),
            embedding: t_embedding(),
            independence: t_independence(),
        }
    }
}

/// A Dirac structure on `R^dim` given by a presymplectic form.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    #[serde(default)]
    pub coords: Vec<String>,
    /// `"i j expr"` entries of the two-form.
    #[serde(default)]
    pub two_form: Vec<String>,
    #[serde(default = "default_embedding_half")]
    pub half_width: f64,
    #[serde(default = "default_embedding_samples")]
    pub samples: usize,
}

fn default_embedding_half() -> f64 {
    0.5
}
fn default_embedding_samples() -> usize {
    20
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub csv: bool,
}

/// `"i j expr"` with 1-based indices.
fn split_entry(line: &str, dim: usize) -> Result<(usize, usize, &str)> {
    let mut it = line.trim_start().splitn(3, char::is_whitespace);
    let bad = || Error::Scene(format!("entry `{line}` is not of the form `i j expr`"));
    let i: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let j: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let e = it.next().map(str::trim).filter(|s| !s.is_empty()).ok_or_else(bad)?;
    if i == 0 || j == 0 || i > dim || j > dim || i == j {
        return Err(Error::Scene(format!("entry `{line}` has indices outside 1..={dim} or on the diagonal")));
    }
    Ok((i, j, e))
}

fn names(coords: &[String], dim: usize) -> Result<VarNames> {
    if coords.is_empty() {
        return Ok(VarNames::standard(dim));
    }
    if coords.len() != dim {
        return Err(Error::Scene(format!("{} coordinate names for dimension {dim}", coords.len())));
    }
    VarNames::named(coords)
}

impl Scene {
    pub fn parse(text: &str) -> Result<Scene> {
        let scene: Scene = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Scene(format!("line {line}: {}", e.message()))
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &std::path::Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scene::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        match (&self.poisson, &self.submanifold, &self.embedding) {
            (Some(_), Some(_), _) | (None, None, Some(_)) => {}
            _ => return Err(Error::Scene("need [poisson] with [submanifold], or a [embedding] section".into())),
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("rank", t.rank),
            ("jacobi", t.jacobi),
            ("saturation", t.saturation),
            ("full_fiber", t.full_fiber),
            ("complement", t.complement),
            ("eta", t.eta),
            ("normal_form", t.normal_form),
            ("embedding", t.embedding),
            ("independence", t.independence),
        ] {
            if !(v > 0.0) {
                return Err(Error::Scene(format!("tolerance `{name}` must be positive")));
            }
        }
        if self.flow.steps < crate::sprayflow::MIN_STEPS || self.flow.steps % 2 != 0 {
            return Err(Error::Scene(format!("flow steps must be even and at least {}", crate::sprayflow::MIN_STEPS)));
        }
        if let (Some(p), Some(s)) = (&self.poisson, &self.submanifold) {
            if s.chart.len() != p.dim {
                return Err(Error::Scene(format!("chart has {} components, ambient dimension is {}", s.chart.len(), p.dim)));
            }
            let k = s.params.len();
            if s.lo.len() != k || s.hi.len() != k || s.grid.len() != k {
                return Err(Error::Scene(format!("lo, hi and grid need {k} entries")));
            }
            if !self.model.grid.is_empty() && self.model.grid.len() != k {
                return Err(Error::Scene(format!("model grid needs {k} entries")));
            }
            for v in self.complement.g.iter().chain(&self.complement.h) {
                if v.len() != p.dim {
                    return Err(Error::Scene(format!("complement frame vectors need {} components", p.dim)));
                }
            }
        }
        Ok(())
    }

    pub fn field(&self) -> Result<BivectorField> {
        let p = self.poisson.as_ref().ok_or_else(|| Error::Scene("no [poisson] section".into()))?;
        let vars = names(&p.coords, p.dim)?;
        let entries = p.entries.iter().map(|l| split_entry(l, p.dim)).collect::<Result<Vec<_>>>()?;
        Ok(BivectorField::parse(p.dim, &entries, &vars)?.with_domain(DomainBox::cube(p.dim, p.half_width)))
    }

    fn params(&self) -> Result<(VarNames, &SubmanifoldSection)> {
        let s = self.submanifold.as_ref().ok_or_else(|| Error::Scene("no [submanifold] section".into()))?;
        Ok((VarNames::named(&s.params)?, s))
    }

    pub fn chart(&self) -> Result<Chart> {
        let (vars, s) = self.params()?;
        let comps: Vec<&str> = s.chart.iter().map(String::as_str).collect();
        Chart::parse(&comps, &vars, DomainBox::new(s.lo.clone(), s.hi.clone()))
    }

    pub fn complement_spec(&self) -> Result<ComplementSpec> {
        let (vars, _) = self.params()?;
        let frame = |f: &[Vec<String>]| -> Result<Vec<Vec<Expression>>> {
            f.iter()
                .map(|v| v.iter().map(|e| Expression::parse_with(e, &vars)).collect())
                .collect()
        };
        Ok(ComplementSpec {
            mode: self.complement.mode,
            g: frame(&self.complement.g)?,
            h: frame(&self.complement.h)?,
        })
    }

    /// Base grid for the model stages, inside the shrunk parameter box.
    pub fn model_grid(&self) -> Result<Vec<Vec<f64>>> {
        let chart = self.chart()?;
        let s = self.submanifold.as_ref().expect("checked by chart");
        let counts = if self.model.grid.is_empty() { &s.grid } else { &self.model.grid };
        Ok(chart.domain().shrink(self.model.shrink).grid(counts))
    }

    /// Presymplectic form of the `[embedding]` section as a closure in the coordinates.
    pub fn embedding_dirac(&self) -> Result<(usize, impl Fn(&[f64]) -> Result<DiracSpace>)> {
        let g = self.embedding.as_ref().ok_or_else(|| Error::Scene("no [embedding] section".into()))?;
        let vars = names(&g.coords, g.dim)?;
        let dim = g.dim;
        let entries = g
            .two_form
            .iter()
            .map(|l| {
                let (i, j, e) = split_entry(l, dim)?;
                Ok((i - 1, j - 1, Expression::parse_with(e, &vars)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((dim, move |u: &[f64]| {
            let mut w = Mat::zeros(dim, dim);
            for (i, j, e) in &entries {
                let v = e.eval(u)?;
                w[(*i, *j)] += v;
                w[(*j, *i)] -= v;
            }
            Ok(DiracSpace::graph_two_form(&SkewForm::antisymmetrize(&w)))
        }))
    }
}

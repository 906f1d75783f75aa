//! Subcommand arguments, defaults and runners.

use std::fs::File;
use std::io::BufWriter;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use liegerm::bch::{bch_integral, bch_truncated, verify_group_axioms, verify_h_lemma, QuadratureSpec};
use liegerm::germ::{
    compare_germs, default_ladder, hardy_dominator, verify_domination, Germ, GermExpr, HardySeries, Layered, Site,
    Verdict as GermVerdict,
};
use liegerm::lie::{check_intertwining, norm};
use liegerm::local_group::{assoc_defect, deviations, LocalGroup};
use liegerm::matrix::Matrix;
use liegerm::near_fit::{default_ladder as eps_ladder, fit_group, near_sweep, sawtooth, taylor_probe};
use liegerm::olver::{olver_demo, preset, write_polylines_csv, PRESETS};
use liegerm::rng::{SplitMix64, DEFAULT_SEED};

use crate::error::CliError;
use crate::inputs::{bracket, group, parse_list, parse_point, parse_tuple, perturbation_id, read_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

pub struct Outcome {
    pub results: Value,
    pub verdict: Verdict,
}

pub trait Command: Args + Serialize + DeserializeOwned + Clone {
    const NAME: &'static str;

    fn seed(&mut self) -> Option<&mut Option<u64>> {
        None
    }

    fn fill_defaults(&mut self);

    fn run(&self) -> Result<Outcome, CliError>;
}

fn req<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::usage("missing-argument", format!("--{name} is required")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn csv_out(path: &str) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::usage("io", format!("cannot write {path}: {e}")))
}

/// Direct BCH evaluation by series or integral.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BchEval {
    /// Built-in bracket (zero, heisenberg, so3, sl2, affine1) or bracket file
    #[arg(long)]
    pub bracket: Option<String>,
    /// First argument, comma-separated coordinates
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Second argument, comma-separated coordinates
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    /// series or integral
    #[arg(long)]
    pub method: Option<String>,
    /// Series truncation order (1..=6)
    #[arg(long)]
    pub order: Option<usize>,
    /// Gauss-Legendre nodes (8, 16, 32, 64)
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Re-run with doubled nodes to estimate the error
    #[arg(long)]
    pub refine: Option<bool>,
}

impl Command for BchEval {
    const NAME: &'static str = "bch-eval";

    fn fill_defaults(&mut self) {
        self.method.get_or_insert_with(|| "integral".into());
        self.order.get_or_insert(6);
        self.nodes.get_or_insert(16);
        self.refine.get_or_insert(true);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let b = bracket(req(&self.bracket, "bracket")?)?;
        let x = parse_list("x", req(&self.x, "x")?)?;
        let y = parse_list("y", req(&self.y, "y")?)?;
        let h = match req(&self.method, "method")?.as_str() {
            "series" => bch_truncated(&b, &x, &y, self.order.unwrap_or(6))?,
            "integral" => {
                bch_integral(&b, &x, &y, QuadratureSpec::new(self.nodes.unwrap_or(16), self.refine.unwrap_or(true))?)?
            }
            other => {
                return Err(CliError::usage("parse", format!("--method must be series or integral, got {other:?}")))
            }
        };
        Ok(Outcome { results: json!({ "bracket": b.name(), "dim": b.dim(), "h": h }), verdict: Verdict::Pass })
    }
}

/// Associativity, inverse and identity residuals of H on seeded triples.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BchAxioms {
    #[arg(long)]
    pub bracket: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Radius of the ball the triples are drawn from
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Command for BchAxioms {
    const NAME: &'static str = "bch-axioms";

    fn seed(&mut self) -> Option<&mut Option<u64>> {
        Some(&mut self.seed)
    }

    fn fill_defaults(&mut self) {
        self.samples.get_or_insert(100);
        self.scale.get_or_insert(0.05);
        self.tol.get_or_insert(1e-7);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let b = bracket(req(&self.bracket, "bracket")?)?;
        let (samples, seed, scale, tol) = (
            self.samples.unwrap_or(100),
            self.seed.unwrap_or(DEFAULT_SEED),
            self.scale.unwrap_or(0.05),
            self.tol.unwrap_or(1e-7),
        );
        let n = b.dim();
        let mut worst = [0.0f64; 4];
        let mut failures = Vec::new();
        for i in 0..samples {
            let mut rng = SplitMix64::fork(seed, i as u64);
            let (x, y, z) = (rng.in_ball(n, scale), rng.in_ball(n, scale), rng.in_ball(n, scale));
            let r = verify_group_axioms(&b, &x, &y, &z, tol)?;
            let err = r.est_error_assoc.max(r.est_error_inverse).max(r.est_error_identity);
            for (w, v) in worst.iter_mut().zip([r.associativity, r.inverse, r.identity, err]) {
                *w = w.max(v);
            }
            if !r.pass {
                failures.push(i);
            }
        }
        Ok(Outcome {
            results: json!({
                "bracket": b.name(),
                "samples": samples,
                "scale": scale,
                "tol": tol,
                "max_associativity": worst[0],
                "max_inverse": worst[1],
                "max_identity": worst[2],
                "max_est_error": worst[3],
                "failures": failures.len(),
                "failed_samples": failures,
            }),
            verdict: Verdict::from_bool(failures.is_empty()),
        })
    }
}

/// Seeded certification of the H-lemma bounds.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Hlemma {
    #[arg(long)]
    pub bracket: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command for Hlemma {
    const NAME: &'static str = "hlemma";

    fn seed(&mut self) -> Option<&mut Option<u64>> {
        Some(&mut self.seed)
    }

    fn fill_defaults(&mut self) {
        self.samples.get_or_insert(10_000);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let b = bracket(req(&self.bracket, "bracket")?)?;
        let r = verify_h_lemma(&b, self.samples.unwrap_or(10_000), self.seed.unwrap_or(DEFAULT_SEED))?;
        let mut results = to_value(&r);
        results["slack"] = json!(liegerm::bch::H_LEMMA_SLACK);
        Ok(Outcome { verdict: Verdict::from_bool(r.pass), results })
    }
}

/// Shared group selection flags.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GroupSel {
    /// bch:<bracket>, chart:<algebra> or a group-spec JSON file
    #[arg(long)]
    pub group: Option<String>,
    /// Domain radius for bch: and chart: groups
    #[arg(long)]
    pub radius: Option<f64>,
    /// Wrap the group in a perturbation (quadratic, cubic, off_diagonal, inverse, zero)
    #[arg(long)]
    pub perturbation: Option<String>,
    /// Perturbation size
    #[arg(long)]
    pub eps: Option<f64>,
}

impl GroupSel {
    fn fill(&mut self) {
        self.radius.get_or_insert(0.5);
        if self.perturbation.is_some() {
            self.eps.get_or_insert(1e-3);
        }
    }

    fn build(&self) -> Result<liegerm::local_group::LocalGroupSpec, CliError> {
        group(
            req(&self.group, "group")?,
            self.radius.unwrap_or(0.5),
            self.perturbation.as_deref(),
            self.eps.unwrap_or(1e-3),
        )
    }
}

/// Grid maxima of the axiom deviations.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GroupDev {
    #[command(flatten)]
    #[serde(flatten)]
    pub sel: GroupSel,
    /// Lattice points per axis
    #[arg(long)]
    pub grid: Option<usize>,
    /// Threshold for the s-almost check
    #[arg(long)]
    pub s: Option<f64>,
}

impl Command for GroupDev {
    const NAME: &'static str = "group-dev";

    fn fill_defaults(&mut self) {
        self.sel.fill();
        self.grid.get_or_insert(5);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let g = self.sel.build()?;
        let d = deviations(&g, self.grid.unwrap_or(5))?;
        let (s_almost, verdict) = match self.s {
            Some(s) => {
                let ok = d.d1 < s && d.d2 < s && d.d3 < s;
                (Some(ok), Verdict::from_bool(ok))
            }
            None => (None, Verdict::Inconclusive),
        };
        Ok(Outcome {
            results: json!({ "family": g.family_name(), "dim": g.dim(), "deviations": d, "s": self.s, "s_almost": s_almost }),
            verdict,
        })
    }
}

/// Every association of a tuple and their largest disagreement.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GroupAssoc {
    #[command(flatten)]
    #[serde(flatten)]
    pub sel: GroupSel,
    /// Number of factors; must match the tuple
    #[arg(long)]
    pub p: Option<usize>,
    /// Factors as a,b,c;d,e,f;...
    #[arg(long, allow_hyphen_values = true)]
    pub tuple: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Command for GroupAssoc {
    const NAME: &'static str = "group-assoc";

    fn fill_defaults(&mut self) {
        self.sel.fill();
        self.tol.get_or_insert(1e-8);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let g = self.sel.build()?;
        let tuple = parse_tuple("tuple", req(&self.tuple, "tuple")?)?;
        if let Some(p) = self.p {
            if p != tuple.len() {
                return Err(CliError::usage("parse", format!("--p {p} but the tuple has {} factors", tuple.len())));
            }
        }
        let tol = self.tol.unwrap_or(1e-8);
        let d = assoc_defect(&g, &tuple)?;
        let verdict = Verdict::from_bool(d.max_distance <= tol);
        Ok(Outcome { results: json!({ "associations": d.values.len(), "defect": d, "tol": tol }), verdict })
    }
}

/// Lifted association products on the punctured-plane cover.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OlverDemo {
    /// shipped (alias square), mirrored or control
    #[arg(long)]
    pub preset: Option<String>,
    /// Puncture, overriding the preset
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Four plane points a,b;c,d;..., overriding the preset
    #[arg(long, allow_hyphen_values = true)]
    pub tuple: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Write witness polylines as CSV
    #[arg(long)]
    pub csv: Option<String>,
}

pub const BASE_TOL: f64 = 1e-14;

impl Command for OlverDemo {
    const NAME: &'static str = "olver-demo";

    fn fill_defaults(&mut self) {
        if self.preset.as_deref() == Some("square") {
            self.preset = Some("shipped".into());
        }
        let p = preset(self.preset.get_or_insert_with(|| "shipped".into()));
        if let Some(p) = p {
            self.x0.get_or_insert_with(|| format!("{:?},{:?}", p.x0[0], p.x0[1]));
            self.tuple.get_or_insert_with(|| {
                p.tuple.iter().map(|q| format!("{:?},{:?}", q[0], q[1])).collect::<Vec<_>>().join(";")
            });
            self.radius.get_or_insert(p.radius);
        }
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let name = req(&self.preset, "preset")?;
        if preset(name).is_none() {
            let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            return Err(CliError::usage(
                "unknown-preset",
                format!("unknown preset {name:?}; expected one of {names:?} or square"),
            ));
        }
        let x0 = parse_point("x0", req(&self.x0, "x0")?)?;
        let tuple = parse_tuple("tuple", req(&self.tuple, "tuple")?)?
            .into_iter()
            .map(|v| match v.as_slice() {
                [a, b] => Ok([*a, *b]),
                _ => Err(CliError::usage("parse", "--tuple entries must be plane points")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let r = olver_demo(x0, &tuple, req(&self.radius, "radius").copied()?)?;
        if let Some(path) = &self.csv {
            write_polylines_csv(&r, csv_out(path)?).map_err(|e| CliError::usage("io", format!("{path}: {e}")))?;
        }
        let matches = r.sheet_left_minus_right == r.loop_winding;
        let bases_agree = r.base_spread <= BASE_TOL;
        let first = r.associations.first().map(|a| a.point.sheet);
        let identical = r.associations.iter().all(|a| Some(a.point.sheet) == first);
        Ok(Outcome {
            results: json!({
                "lift": r,
                "checks": {
                    "sheet_difference_matches_winding": matches,
                    "bases_agree": bases_agree,
                    "base_tol": BASE_TOL,
                    "sheets_identical": identical,
                },
            }),
            verdict: Verdict::from_bool(matches && bases_agree),
        })
    }
}

/// Bracket extraction and BCH refit of a group.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct NearFit {
    #[command(flatten)]
    #[serde(flatten)]
    pub sel: GroupSel,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Finite-difference step (default max(1e-4, eps^(1/3) r))
    #[arg(long)]
    pub h: Option<f64>,
    /// Pass when the fitted distance is at most this
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Command for NearFit {
    const NAME: &'static str = "near-fit";

    fn fill_defaults(&mut self) {
        self.sel.fill();
        self.grid.get_or_insert(3);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let g = self.sel.build()?;
        let fit = fit_group(&g, self.grid.unwrap_or(3), self.h)?;
        let verdict = match self.tol {
            Some(t) => Verdict::from_bool(fit.distance <= t),
            None => Verdict::Inconclusive,
        };
        Ok(Outcome { results: json!({ "fit": fit, "tol": self.tol }), verdict })
    }
}

/// Deviation and refit distance along a shrinking perturbation.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct NearSweep {
    /// Base group: bch:<bracket>, chart:<algebra> or a group-spec JSON file
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub perturbation: Option<String>,
    /// Strictly decreasing perturbation sizes
    #[arg(long)]
    pub s_list: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Write the sweep table as CSV
    #[arg(long)]
    pub csv: Option<String>,
}

impl Command for NearSweep {
    const NAME: &'static str = "near-sweep";

    fn fill_defaults(&mut self) {
        self.base.get_or_insert_with(|| "bch:so3".into());
        self.radius.get_or_insert(0.5);
        self.perturbation.get_or_insert_with(|| "quadratic".into());
        self.s_list.get_or_insert_with(|| "0.1,0.01,0.001,0.0001".into());
        self.grid.get_or_insert(3);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let base = group(req(&self.base, "base")?, self.radius.unwrap_or(0.5), None, 0.0)?;
        let s = parse_list("s-list", req(&self.s_list, "s-list")?)?;
        let r =
            near_sweep(&base, perturbation_id(req(&self.perturbation, "perturbation")?)?, &s, self.grid.unwrap_or(3))?;
        if let Some(path) = &self.csv {
            std::fs::write(path, r.to_csv()).map_err(|e| CliError::usage("io", format!("cannot write {path}: {e}")))?;
        }
        let verdict = match r.verdict.as_str() {
            "exact" | "converging" => Verdict::Pass,
            _ => Verdict::Fail,
        };
        Ok(Outcome {
            results: json!({ "sweep": r, "exact_tol": liegerm::near_fit::EXACT_DISTANCE, "min_slope": 0.9 }),
            verdict,
        })
    }
}

/// Taylor remainder ratios along an epsilon ladder.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TaylorProbe {
    /// square, cubic, sin or sawtooth
    #[arg(long)]
    pub function: Option<String>,
    /// One-variable germ expression used instead of --function
    #[arg(long)]
    pub expr: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Direction; normalized before use
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub ladder: Option<String>,
    /// Sawtooth amplitude a (period a^2)
    #[arg(long)]
    pub amplitude: Option<f64>,
}

impl Command for TaylorProbe {
    const NAME: &'static str = "taylor-probe";

    fn fill_defaults(&mut self) {
        if self.expr.is_none() {
            self.function.get_or_insert_with(|| "square".into());
        }
        self.k.get_or_insert(2);
        self.ladder.get_or_insert_with(|| eps_ladder().iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(","));
        if self.function.as_deref() == Some("sawtooth") {
            self.amplitude.get_or_insert(1e-3);
        }
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let x = parse_list("x", req(&self.x, "x")?)?;
        let mut v = parse_list("v", req(&self.v, "v")?)?;
        let nv = norm(&v);
        if !(nv > 0.0) {
            return Err(CliError::usage("parse", "--v must be nonzero"));
        }
        v.iter_mut().for_each(|a| *a /= nv);
        let ladder = parse_list("ladder", req(&self.ladder, "ladder")?)?;
        let amplitude = self.amplitude.unwrap_or(1e-3);
        let f: Box<dyn Fn(&[f64]) -> f64> = match (&self.expr, self.function.as_deref()) {
            (Some(text), _) => {
                let e = GermExpr::parse(text)?;
                Box::new(move |p: &[f64]| {
                    Layered::from_f64(p[0]).and_then(|x| e.eval(&x)).ok().and_then(|y| y.to_f64()).unwrap_or(f64::NAN)
                })
            }
            (None, Some("square")) => Box::new(|p: &[f64]| p.iter().map(|a| a * a).sum()),
            (None, Some("cubic")) => Box::new(|p: &[f64]| p[0].powi(3) - 2.0 * p[0] + 1.0),
            (None, Some("sin")) => {
                Box::new(|p: &[f64]| p.iter().enumerate().map(|(i, a)| (i + 1) as f64 * a).sum::<f64>().sin())
            }
            (None, Some("sawtooth")) => Box::new(move |p: &[f64]| sawtooth(amplitude, p[0])),
            (None, other) => {
                return Err(CliError::usage(
                    "parse",
                    format!("unknown --function {other:?}; expected square, cubic, sin or sawtooth"),
                ))
            }
        };
        let r = taylor_probe(&f, &x, &v, self.k.unwrap_or(2), &ladder)?;
        let verdict = Verdict::from_bool(r.verdict == "consistent-with-C^k");
        Ok(Outcome {
            results: json!({ "probe": r, "exact_ratio_tol": liegerm::near_fit::EXACT_RATIO, "min_slope": liegerm::near_fit::MIN_SLOPE_TAYLOR }),
            verdict,
        })
    }
}

fn site(text: &str) -> Result<Site, CliError> {
    match text {
        "at-zero" | "zero" | "0" => Ok(Site::AtZero),
        "at-infinity" | "infinity" | "inf" => Ok(Site::AtInfinity),
        other => Err(CliError::usage("parse", format!("--site must be at-zero or at-infinity, got {other:?}"))),
    }
}

/// Eventual comparison of two germs along a ladder.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GermCompare {
    /// Germ expression, e.g. "(exp (neg (recip x)))"
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    /// at-zero or at-infinity
    #[arg(long)]
    pub site: Option<String>,
    #[arg(long)]
    pub ladder: Option<String>,
    /// Expected verdict (f-prec-g or g-prec-f); fail when it differs
    #[arg(long)]
    pub expect: Option<String>,
}

impl Command for GermCompare {
    const NAME: &'static str = "germ-compare";

    fn fill_defaults(&mut self) {
        let s = site(self.site.get_or_insert_with(|| "at-zero".into())).unwrap_or(Site::AtZero);
        self.ladder
            .get_or_insert_with(|| default_ladder(s).iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(","));
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let s = site(req(&self.site, "site")?)?;
        let f = Germ::parse(req(&self.f, "f")?, s)?;
        let g = Germ::parse(req(&self.g, "g")?, s)?;
        let ladder = parse_list("ladder", req(&self.ladder, "ladder")?)?;
        let c = compare_germs(&f, &g, &ladder)?;
        let verdict = match self.expect.as_deref() {
            Some(e) => {
                let want: GermVerdict = serde_json::from_value(json!(e)).map_err(|_| {
                    CliError::usage("parse", format!("--expect must be f-prec-g or g-prec-f, got {e:?}"))
                })?;
                Verdict::from_bool(c.verdict == want)
            }
            None if c.verdict == GermVerdict::Inconclusive => Verdict::Inconclusive,
            None => Verdict::Pass,
        };
        Ok(Outcome { results: json!({ "f": f.expr, "g": g.expr, "comparison": c }), verdict })
    }
}

/// Hardy dominating series for a germ at infinity.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HardyBuild {
    /// Increasing germ at infinity, e.g. "(pow x 2)"
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Truncation length J (at most 60)
    #[arg(long)]
    pub terms: Option<usize>,
    /// Write the series JSON here
    #[arg(long)]
    pub series_out: Option<String>,
}

impl Command for HardyBuild {
    const NAME: &'static str = "hardy-build";

    fn fill_defaults(&mut self) {
        self.q.get_or_insert(2.0);
        self.terms.get_or_insert(20);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let m = Germ::parse(req(&self.m, "m")?, Site::AtInfinity)?.monotone();
        let u = hardy_dominator(&m, self.q.unwrap_or(2.0), self.terms.unwrap_or(20))?;
        if let Some(path) = &self.series_out {
            std::fs::write(path, u.to_json() + "\n")
                .map_err(|e| CliError::usage("io", format!("cannot write {path}: {e}")))?;
        }
        Ok(Outcome { results: json!({ "m": m.expr, "series": u }), verdict: Verdict::Pass })
    }
}

/// Link-by-link check of the domination chain.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct HardyVerify {
    #[arg(long)]
    pub m: Option<String>,
    /// Series JSON from hardy-build; built from --m, --q, --terms when absent
    #[arg(long)]
    pub series: Option<String>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub terms: Option<usize>,
    #[arg(long)]
    pub j_from: Option<usize>,
    #[arg(long)]
    pub j_to: Option<usize>,
    /// Negative control: set n_j = ceil(ln m(a_{j+1})/ln q) - 1 at this j
    #[arg(long)]
    pub corrupt_j: Option<usize>,
}

impl Command for HardyVerify {
    const NAME: &'static str = "hardy-verify";

    fn fill_defaults(&mut self) {
        if self.series.is_none() {
            self.q.get_or_insert(2.0);
            self.terms.get_or_insert(20);
        }
        self.j_from.get_or_insert(1);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let m = Germ::parse(req(&self.m, "m")?, Site::AtInfinity)?.monotone();
        let mut u = match &self.series {
            Some(path) => serde_json::from_str::<HardySeries>(&read_file("series", path)?).map_err(|e| {
                CliError::usage("parse", format!("{path}: line {}, column {}: {e}", e.line(), e.column()))
            })?,
            None => hardy_dominator(&m, self.q.unwrap_or(2.0), self.terms.unwrap_or(20))?,
        };
        if u.n.len() != u.terms {
            return Err(CliError::usage("parse", format!("series lists {} exponents for J = {}", u.n.len(), u.terms)));
        }
        let mut corrupted = Value::Null;
        if let Some(j) = self.corrupt_j {
            if !(1..=u.terms).contains(&j) {
                return Err(CliError::usage("parse", format!("--corrupt-j {j} outside 1..={}", u.terms)));
            }
            let lm = m.eval(((j + 1) as f64).exp())?.ln()?;
            let quotient = lm
                .scale(1.0 / u.q.ln())?
                .to_f64()
                .ok_or_else(|| CliError::from(liegerm::germ::GermError::ExponentOverflow { j }))?;
            let bad = (quotient.ceil() - 1.0).max(0.0) as u64;
            corrupted = json!({ "j": j, "recipe": u.n[j - 1], "used": bad });
            u = u.with_exponent(j, bad);
        }
        let j_to = self.j_to.unwrap_or(u.terms);
        let r = verify_domination(&u, &m, self.j_from.unwrap_or(1), j_to)?;
        Ok(Outcome {
            verdict: Verdict::from_bool(r.pass),
            results: json!({
                "m": m.expr,
                "series": u,
                "corrupted": corrupted,
                "link_tol": liegerm::germ::LINK_TOL,
                "report": r,
            }),
        })
    }
}

/// Seeded checks of the conjugation and adjoint intertwining identities.
#[derive(Args, Serialize, Deserialize, Clone, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Intertwine {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Matrix size
    #[arg(long)]
    pub dim: Option<usize>,
    /// Frobenius bound on v
    #[arg(long)]
    pub v_norm: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Command for Intertwine {
    const NAME: &'static str = "intertwine";

    fn seed(&mut self) -> Option<&mut Option<u64>> {
        Some(&mut self.seed)
    }

    fn fill_defaults(&mut self) {
        self.samples.get_or_insert(1000);
        self.dim.get_or_insert(3);
        self.v_norm.get_or_insert(0.5);
        self.tol.get_or_insert(1e-9);
    }

    fn run(&self) -> Result<Outcome, CliError> {
        let (samples, n, v_norm, tol) =
            (self.samples.unwrap_or(1000), self.dim.unwrap_or(3), self.v_norm.unwrap_or(0.5), self.tol.unwrap_or(1e-9));
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        if !(1..=liegerm::matrix::MAX_DIM).contains(&n) {
            return Err(CliError::usage("parse", format!("--dim {n} outside 1..={}", liegerm::matrix::MAX_DIM)));
        }
        let mat = |a: Vec<f64>| Matrix::from_fn(n, |i, j| a[i * n + j]);
        let (mut max1, mut max2) = (0.0f64, 0.0f64);
        let mut failures = Vec::new();
        for i in 0..samples {
            let mut rng = SplitMix64::fork(seed, i as u64);
            let g = mat(rng.in_ball(n * n, 1.0)).exp()?;
            let v = mat(rng.in_ball(n * n, v_norm));
            let w = mat(rng.in_ball(n * n, 1.0));
            let r = check_intertwining(&g, &v, &w, tol)?;
            max1 = max1.max(r.residual_conjugation);
            max2 = max2.max(r.residual_adjoint);
            if !r.pass {
                failures.push(i);
            }
        }
        Ok(Outcome {
            results: json!({
                "samples": samples,
                "dim": n,
                "max_residual_conjugation": max1,
                "max_residual_adjoint": max2,
                "tol": tol,
                "failures": failures.len(),
                "failed_samples": failures,
            }),
            verdict: Verdict::from_bool(failures.is_empty()),
        })
    }
}

//! Commands run on model files, with deterministic JSON reports.
//!
//! Rationals are rendered as `"p/q"` strings, Grassmann elements as lists of
//! `{indices, coeff}` sorted by index list (indices are 1-based positions in
//! the `generators` legend), and object keys are sorted.

use serde_json::{json, Map, Value};

use crate::derham::de_rham_wu;
use crate::fppf::{equivalence_audit, fibred_product, sheaf_audit_holonomy, Cover};
use crate::geometry::{ConnectionModel, PatchModel};
use crate::grassmann::{mask_indices, GrassmannElement, Q};
use crate::holonomy::{
    comparison_check, degree_decomposition_check, galaev_algebra, inclusion_check, invariance_submodule, invariance_vector, SampleSpec, SpanKind,
};
use crate::lie::LieSubalgebra;
use crate::model::ModelFile;
use crate::superfn::SuperFunction;
use crate::supermatrix::SuperMatrix;
use crate::transport::{hybrid_transport, parallel_transport, NumMatrix, PathModel, TransportMode};
use crate::Error;

/// The commands understood by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Curvature,
    Transport,
    Holonomy,
    Compare,
    Twofold,
    DeRhamWu,
    FppfAudit,
    FppfGlue,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Transport => "transport",
            Command::Holonomy => "holonomy",
            Command::Compare => "compare",
            Command::Twofold => "twofold",
            Command::DeRhamWu => "derham-wu",
            Command::FppfAudit => "fppf audit",
            Command::FppfGlue => "fppf glue",
        }
    }
}

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub kmax: Option<usize>,
    pub lprime: Option<usize>,
    pub seed: Option<u64>,
}

pub fn rational(q: &Q) -> Value {
    Value::String(format!("{}/{}", q.numer(), q.denom()))
}

pub fn grassmann(e: &GrassmannElement) -> Value {
    let mut terms: Vec<(Vec<usize>, Value)> = e.terms().iter().map(|(m, c)| (mask_indices(*m).iter().map(|i| i + 1).collect(), rational(c))).collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    Value::Array(terms.into_iter().map(|(i, c)| json!({"indices": i, "coeff": c})).collect())
}

pub fn function(f: &SuperFunction) -> Value {
    if let Some(c) = f.as_constant() {
        return grassmann(&c);
    }
    let mut terms: Vec<(Vec<u32>, Vec<usize>, Value)> = Vec::new();
    for (d, g) in f.terms() {
        for (m, c) in g.terms() {
            terms.push((d.clone(), mask_indices(*m).iter().map(|i| i + 1).collect(), rational(c)));
        }
    }
    terms.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    Value::Array(terms.into_iter().map(|(x, i, c)| json!({"x": x, "indices": i, "coeff": c})).collect())
}

pub fn matrix(m: &SuperMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| function(m.get(i, j))).collect())).collect())
}

fn float(x: f64) -> Value {
    Value::String(format!("{x:.12e}"))
}

fn numeric_body(m: &NumMatrix) -> Value {
    Value::Array((0..m.n).map(|i| Value::Array((0..m.n).map(|j| float(m.get(i, j).get(&0).copied().unwrap_or(0.0))).collect())).collect())
}

fn algebra(a: &LieSubalgebra) -> Value {
    json!({
        "dim": a.dim(),
        "dim_even": a.dim_parity(0),
        "dim_odd": a.dim_parity(1),
        "basis": a.basis().iter().map(matrix).collect::<Vec<_>>(),
    })
}

fn legend(patch: &PatchModel) -> Value {
    let ctx = patch.context();
    Value::Array((0..ctx.total()).map(|g| Value::String(ctx.generator_name(g))).collect())
}

/// Load a model, applying the `L'` override.
pub fn load_model(text: &str, opts: &Options) -> Result<ModelFile, Error> {
    ModelFile::parse_with(text, opts.lprime)
}

struct Ctx<'a> {
    model: &'a ModelFile,
    kmax: usize,
    seed: u64,
}

impl Ctx<'_> {
    fn conn(&self) -> Result<ConnectionModel, Error> {
        self.model.connection()
    }

    fn spec(&self, conn: &ConnectionModel) -> Result<SampleSpec, Error> {
        let base = self.model.base_point()?;
        let mut spec = SampleSpec::standard(conn, base, self.model.samples, self.kmax, conn.patch.lprime, self.seed);
        for (_, p) in self.model.path_models()? {
            if p.start().as_point().as_ref() == Some(&spec.base) {
                if p.is_loop() {
                    spec.loops.push(p.clone());
                }
                spec.paths.push(p);
            }
        }
        Ok(spec)
    }
}

/// Run a command; the report carries `verdicts` and an overall `pass`.
pub fn run_command(cmd: Command, model: &ModelFile, opts: &Options) -> Result<Value, Error> {
    let ctx = Ctx { model, kmax: opts.kmax.unwrap_or(model.kmax), seed: opts.seed.unwrap_or(model.seed) };
    let mut verdicts = Map::new();
    let mut mode = "exact";
    let results = match cmd {
        Command::Curvature => curvature(&ctx, &mut verdicts)?,
        Command::Transport => transport(&ctx, &mut verdicts, &mut mode)?,
        Command::Holonomy => holonomy(&ctx, &mut verdicts)?,
        Command::Compare => compare(&ctx, &mut verdicts)?,
        Command::Twofold => twofold(&ctx, &mut verdicts)?,
        Command::DeRhamWu => derham(&ctx, &mut verdicts)?,
        Command::FppfAudit => fppf_audit(&ctx, &mut verdicts)?,
        Command::FppfGlue => fppf_glue(&ctx, &mut verdicts)?,
    };
    let pass = verdicts.values().all(|v| v.as_bool() == Some(true));
    let mut out = Map::new();
    out.insert("command".into(), json!(cmd.name()));
    out.insert("parameters".into(), json!({"kmax": ctx.kmax, "seed": ctx.seed, "lprime": model.patch.as_ref().map(|p| p.lprime)}));
    out.insert("mode".into(), json!(mode));
    if let Some(p) = &model.patch {
        out.insert("generators".into(), legend(p));
    }
    out.insert("results".into(), results);
    out.insert("verdicts".into(), Value::Object(verdicts));
    out.insert("pass".into(), json!(pass));
    Ok(Value::Object(out))
}

fn curvature(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let conn = ctx.conn()?;
    let r = conn.curvature();
    let par = conn.patch.parities();
    let n = conn.patch.dim();
    let mut comps = Vec::new();
    let mut symmetric = true;
    for a in 0..n {
        for b in 0..n {
            let m = r.comp(&[a, b]);
            let swapped = r.comp(&[b, a]);
            let expect = if par[a] * par[b] == 1 { swapped.clone() } else { swapped.neg() };
            symmetric &= *m == expect;
            if !m.is_zero() {
                comps.push(json!({"a": a + 1, "b": b + 1, "matrix": matrix(m)}));
            }
        }
    }
    verdicts.insert("supersymmetric".into(), json!(symmetric));
    Ok(json!({"components": comps, "flat": comps.is_empty()}))
}

fn transport(ctx: &Ctx, verdicts: &mut Map<String, Value>, mode: &mut &str) -> Result<Value, Error> {
    let conn = ctx.conn()?;
    let mut paths: Vec<(String, PathModel)> = ctx.model.path_models()?;
    if paths.is_empty() {
        let spec = ctx.spec(&conn)?;
        paths = spec.paths.iter().enumerate().map(|(i, p)| (format!("sample{}", i + 1), p.clone())).collect();
    }
    let mut out = Map::new();
    let mut inverse_ok = true;
    let mut stable = true;
    let mut bound_ok = true;
    for (name, path) in paths {
        let op = parallel_transport(&conn, &path)?;
        let back = parallel_transport(&conn, &path.reversed())?;
        let entry = match &op.mode {
            TransportMode::Exact { iterations } => {
                let p = op.exact()?;
                let q = back.exact()?;
                inverse_ok &= p.multiply(q) == SuperMatrix::identity(&conn.bundle);
                let bound = conn.patch.context().total() + 1;
                bound_ok &= iterations.iter().all(|&k| k <= bound);
                json!({"mode": "exact", "matrix": matrix(p), "picard_iterations": iterations})
            }
            TransportMode::Hybrid { steps } => {
                *mode = "hybrid";
                let half = hybrid_transport(&conn, &path, steps / 2)?;
                let diff = op.numeric.max_body_diff(&half.numeric);
                stable &= diff < 1e-8;
                let round = op.numeric.multiply(&back.numeric).max_diff(&NumMatrix::identity(conn.rank()));
                inverse_ok &= round < 1e-8;
                json!({"mode": "hybrid", "steps": steps, "body": numeric_body(&op.numeric), "halving_difference": float(diff)})
            }
        };
        out.insert(name, entry);
    }
    verdicts.insert("inverse".into(), json!(inverse_ok));
    verdicts.insert("picard_bound".into(), json!(bound_ok));
    verdicts.insert("step_halving_stable".into(), json!(stable));
    Ok(Value::Object(out))
}

fn compare_value(ctx: &Ctx, conn: &ConnectionModel, spec: &SampleSpec, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let c = comparison_check(conn, spec)?;
    verdicts.insert("comparison_equal".into(), json!(c.equal));
    verdicts.insert("coefficient_in_galaev".into(), json!(c.coefficient_in_galaev));
    verdicts.insert("galaev_in_coefficient".into(), json!(c.galaev_in_coefficient));
    let _ = ctx;
    Ok(json!({
        "lprime": c.lprime,
        "stabilization": {"dims": c.stabilization.dims, "threshold": c.stabilization.threshold},
        "galaev": algebra(&c.galaev),
        "galaev_real": algebra(&c.galaev_real),
        "coefficient": algebra(&c.coefficient),
    }))
}

fn compare(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let conn = ctx.conn()?;
    let spec = ctx.spec(&conn)?;
    compare_value(ctx, &conn, &spec, verdicts)
}

fn holonomy(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let conn = ctx.conn()?;
    let spec = ctx.spec(&conn)?;
    let mut v = compare_value(ctx, &conn, &spec, verdicts)?;
    let th = v["stabilization"]["threshold"].as_u64().map(|t| t as usize);
    if let Some(n) = th {
        let lp = (n + 2).min(conn.patch.lprime);
        let d = degree_decomposition_check(&conn, &spec, n, lp)?;
        verdicts.insert("degree_decomposition".into(), json!(d.holds()));
        v["degree_decomposition"] = json!({"n": d.n, "lprime": d.lprime, "functorial_dim": d.functorial_dim});
        verdicts.insert("functorial_in_galaev_tensor_t".into(), json!(inclusion_check(&conn, &spec, lp)?));
    } else {
        verdicts.insert("stabilized".into(), json!(false));
    }
    Ok(v)
}

fn twofold(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let conn = ctx.conn()?;
    let spec = ctx.spec(&conn)?;
    let lp = conn.patch.lprime.min(3);
    let mut cases = Map::new();
    let mut agree = true;
    let row = |t: crate::holonomy::Twofold| json!({"a": t.a(), "a_group": t.a_group, "a_algebra": t.a_algebra, "b": t.b(), "b_group": t.b_group, "b_algebra": t.b_algebra, "agree": t.agree()});
    for (name, x) in &ctx.model.vectors {
        if x.len() != conn.rank() {
            return Err(Error::Invalid(format!("vector {name} has {} components, rank is {}", x.len(), conn.rank())));
        }
        let t = invariance_vector(&conn, &spec, x, lp)?;
        agree &= t.agree();
        cases.insert(format!("vector {name}"), row(t));
    }
    for (name, basis) in &ctx.model.submodules {
        match invariance_submodule(&conn, &spec, basis, lp) {
            Ok(t) => {
                agree &= t.agree();
                cases.insert(format!("submodule {name}"), row(t));
            }
            Err(e) => {
                cases.insert(format!("submodule {name}"), json!({"error": e.to_string()}));
            }
        }
    }
    verdicts.insert("a_equals_b".into(), json!(agree));
    Ok(json!({"lprime": lp, "cases": cases}))
}

fn derham(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let metric = ctx.model.metric()?;
    let conn = crate::geometry::levi_civita(&metric)?;
    let spec = ctx.spec(&conn)?;
    let d = de_rham_wu(&metric, &spec)?;
    for (k, v) in [
        ("factors_invariant", d.factors_invariant),
        ("factors_nondegenerate", d.factors_nondegenerate),
        ("complements_match", d.complements_match),
        ("block_diagonal", d.block_diagonal),
        ("local_product", d.local_product),
        ("kernel_is_flat_block", d.kernel_is_flat_block),
        ("direct_sum", d.direct_sum),
    ] {
        verdicts.insert(k.into(), json!(v));
    }
    let factors: Vec<Value> = d
        .factors
        .iter()
        .map(|f| json!({"coordinates": f.coords.iter().map(|c| c + 1).collect::<Vec<_>>(), "flat": f.flat, "weakly_irreducible": f.weakly_irreducible}))
        .collect();
    Ok(json!({"factors": factors, "holonomy_dim": d.holonomy_dim}))
}

fn fppf_audit(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let mut rows = Map::new();
    let mut agree = true;
    for (name, phi) in &ctx.model.morphisms {
        let a = equivalence_audit(phi);
        agree &= a.agree();
        rows.insert(
            name.clone(),
            json!({
                "source": phi.source,
                "target": phi.target,
                "images": phi.images().iter().map(grassmann).collect::<Vec<_>>(),
                "submersion": a.submersion,
                "free": a.free,
                "restrictions": a.restrictions.iter().map(|(s, f)| json!({"submersion": s, "free": f})).collect::<Vec<_>>(),
                "agree": a.agree(),
            }),
        );
    }
    verdicts.insert("zero_disagreements".into(), json!(agree));
    Ok(json!({"morphisms": rows}))
}

fn fppf_glue(ctx: &Ctx, verdicts: &mut Map<String, Value>) -> Result<Value, Error> {
    let conn = ctx.conn()?;
    let spec = ctx.spec(&conn)?;
    let mut out = Map::new();
    let mut ok = true;
    for (name, base, members) in &ctx.model.covers {
        let maps = members.iter().map(|m| ctx.model.morphism(m).cloned().expect("checked at parse time")).collect();
        let cover = Cover::new(*base, maps)?;
        let mut products = Vec::new();
        for i in 0..cover.maps.len() {
            for j in 0..cover.maps.len() {
                products.push(fibred_product(&cover.maps[i], &cover.maps[j])?.generators);
            }
        }
        let a = sheaf_audit_holonomy(&conn, &spec, &cover)?;
        ok &= a.holds();
        out.insert(
            name.clone(),
            json!({
                "members": members,
                "fibred_product_generators": products,
                "group_glues": a.group_glues,
                "algebra_glues": a.algebra_glues,
                "group_corrupted_rejected": a.group_corrupted_rejected,
                "algebra_corrupted_rejected": a.algebra_corrupted_rejected,
                "unique": a.unique,
                "families": a.families,
            }),
        );
    }
    verdicts.insert("sheaf_property".into(), json!(ok));
    Ok(json!({"covers": out, "galaev_dim": galaev_algebra(&conn, &spec, SpanKind::Module)?.dim()}))
}

/// Machine-readable name of an error.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::ContextMismatch => "context_mismatch",
        Error::NotInvertible => "not_invertible",
        Error::Parity(_) => "parity_error",
        Error::Precondition(_) => "precondition",
        Error::Invalid(_) => "invalid",
        Error::TTooSmall { .. } => "t_too_small",
        Error::HybridModeUnsupported => "hybrid_mode_unsupported",
        Error::Parse { msg, .. } if msg.starts_with("unknown symbol") => "unknown_symbol",
        Error::Parse { .. } => "syntax_error",
    }
}

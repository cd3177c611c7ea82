//! Line-oriented scenario files.
//!
//! ```text
//! file      = { statement } ;
//! statement = key "=" value newline ;
//! key       = ident ;                      (* e.g. omega, tol.geometric *)
//! value     = expr | string | "[" [ value { "," value } ] "]" ;
//! ```
//!
//! Newlines inside brackets are ignored, so matrices may span lines. `#`
//! starts a comment.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::expr::{eval_constant, BinOp, Expr, Func, Parser, Tok};
use crate::action::{GroupActionSpec, MomentumMapSpec};
use crate::error::{Error, ParseError, Result};
use crate::geom::{ChartPoint, TensorFieldSpec};
use crate::reduction::{default_fiber_params, ReductionScenario, ReductionTolerances, SampleRegion, SectionMap};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Expr(Expr),
    Str(String),
    List(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    line: usize,
}

fn value(p: &mut Parser<'_>) -> std::result::Result<Value, ParseError> {
    match p.peek().tok.clone() {
        Tok::Sym('[') => {
            p.open_bracket('[')?;
            let mut items = Vec::new();
            if p.peek().tok != Tok::Sym(']') {
                loop {
                    items.push(value(p)?);
                    if !p.eat(',') {
                        break;
                    }
                }
            }
            p.close_bracket(']', &["`,`"])?;
            Ok(Value::List(items))
        }
        Tok::Str(s) => {
            p.next();
            Ok(Value::Str(s))
        }
        _ => Ok(Value::Expr(p.expr()?)),
    }
}

fn parse_entries(text: &str) -> std::result::Result<Vec<(String, Entry)>, ParseError> {
    let toks = super::expr::lex(text)?;
    let mut p = Parser::new(&toks);
    let mut out = Vec::new();
    loop {
        while p.peek().tok == Tok::Newline {
            p.next();
        }
        let t = p.peek().clone();
        let key = match t.tok {
            Tok::Eof => break,
            Tok::Ident(k) => k,
            _ => return Err(p.error(&["key"])),
        };
        p.next();
        p.expect('=')?;
        let v = value(&mut p)?;
        match p.peek().tok {
            Tok::Newline | Tok::Eof => {}
            _ => return Err(p.error(&["operator", "end of line"])),
        }
        out.push((key, Entry { value: v, line: t.line }));
    }
    Ok(out)
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: String,
    pub dim: usize,
    pub group_dim: usize,
    pub quotient_dim: usize,
    pub omega: Vec<Vec<Expr>>,
    pub metric: Vec<Vec<Expr>>,
    pub acs: Vec<Vec<Expr>>,
    /// `Phi_t(x)`, one expression per coordinate, in `x1..xn` and `t1..tk`.
    pub action: Vec<Expr>,
    pub mu: Vec<Expr>,
    pub beta: Vec<f64>,
    /// `sigma(w)` in `w1..wq`.
    pub section: Vec<Expr>,
    pub periods: Option<Vec<f64>>,
    pub quadrature: usize,
    pub region: SampleRegion,
    pub sample_points: Vec<Vec<f64>>,
    pub tolerances: ReductionTolerances,
}

const KEYS: &[&str] = &[
    "name",
    "dim",
    "group_dim",
    "quotient_dim",
    "omega",
    "metric",
    "acs",
    "action",
    "mu",
    "beta",
    "section",
    "period",
    "quadrature",
    "samples.radius",
    "samples.box",
    "samples.points",
    "tol.constraint",
    "tol.geometric",
    "tol.algebraic",
    "tol.hypothesis",
    "tol.rank",
];

struct Entries(BTreeMap<String, Entry>);

fn invalid(line: usize, msg: impl AsRef<str>) -> Error {
    Error::Validation(format!("line {line}: {}", msg.as_ref()))
}

impl Entries {
    fn get(&self, key: &str) -> Result<&Entry> {
        self.0
            .get(key)
            .ok_or_else(|| Error::Validation(format!("missing key `{key}`")))
    }

    fn constant(&self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.0.get(key) else { return Ok(None) };
        match &e.value {
            Value::Expr(x) => eval_constant(x)
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| invalid(e.line, format!("`{key}` must be a finite constant"))),
            _ => Err(invalid(e.line, format!("`{key}` must be a number"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        let line = self.0.get(key).map(|e| e.line).unwrap_or(0);
        match self.constant(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e6 => Ok(Some(v as usize)),
            Some(v) => Err(invalid(line, format!("`{key}` must be a non-negative integer, got {v}"))),
        }
    }

    fn exprs(&self, key: &str) -> Result<Vec<Expr>> {
        let e = self.get(key)?;
        list_of_exprs(&e.value).ok_or_else(|| invalid(e.line, format!("`{key}` must be an expression or a list of them")))
    }

    fn constants(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.0.get(key) else { return Ok(None) };
        let exprs = list_of_exprs(&e.value).ok_or_else(|| invalid(e.line, format!("`{key}` must be a list of numbers")))?;
        exprs
            .iter()
            .map(|x| eval_constant(x).filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .map(Some)
            .ok_or_else(|| invalid(e.line, format!("`{key}` must contain finite constants")))
    }

    fn matrix(&self, key: &str, n: usize) -> Result<Vec<Vec<Expr>>> {
        let e = self.get(key)?;
        let bad = || invalid(e.line, format!("`{key}` must be a {n}x{n} matrix"));
        let Value::List(rows) = &e.value else { return Err(bad()) };
        if rows.len() != n {
            return Err(bad());
        }
        rows.iter()
            .map(|r| match r {
                Value::List(cells) if cells.len() == n => cells
                    .iter()
                    .map(|c| match c {
                        Value::Expr(x) => Ok(x.clone()),
                        _ => Err(bad()),
                    })
                    .collect(),
                _ => Err(bad()),
            })
            .collect()
    }
}

fn list_of_exprs(v: &Value) -> Option<Vec<Expr>> {
    match v {
        Value::Expr(x) => Some(vec![x.clone()]),
        Value::List(items) => items
            .iter()
            .map(|i| match i {
                Value::Expr(x) => Some(x.clone()),
                _ => None,
            })
            .collect(),
        Value::Str(_) => None,
    }
}

/// Identifiers an expression may use: `prefix1..prefixN` for each allowed
/// prefix, plus `pi`.
fn check_idents(exprs: &[&Expr], allowed: &[(char, usize)], line: usize, what: &str) -> Result<()> {
    let mut bad = None;
    for e in exprs {
        e.for_each_var(&mut |v| {
            if bad.is_none() && slot(v, allowed).is_none() && v != "pi" {
                bad = Some(v.to_string());
            }
        });
    }
    match bad {
        Some(v) => Err(invalid(line, format!("unknown identifier `{v}` in {what}"))),
        None => Ok(()),
    }
}

/// Slot of `name` when the variables are laid out prefix by prefix.
fn slot(name: &str, layout: &[(char, usize)]) -> Option<usize> {
    let mut chars = name.chars();
    let prefix = chars.next()?;
    let digits = chars.as_str();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    let index: usize = digits.parse().ok()?;
    let mut offset = 0;
    for &(p, count) in layout {
        if p == prefix {
            return (1..=count).contains(&index).then_some(offset + index - 1);
        }
        offset += count;
    }
    None
}

/// Parse and validate scenario text.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let raw = parse_entries(text)?;
    let mut map = BTreeMap::new();
    for (key, entry) in raw {
        if !KEYS.contains(&key.as_str()) {
            return Err(invalid(entry.line, format!("unknown key `{key}`")));
        }
        let line = entry.line;
        if map.insert(key.clone(), entry).is_some() {
            return Err(invalid(line, format!("duplicate key `{key}`")));
        }
    }
    let entries = Entries(map);

    let name_entry = entries.get("name")?;
    let name = match &name_entry.value {
        Value::Str(s) => s.clone(),
        Value::Expr(Expr::Var(s)) => s.clone(),
        _ => return Err(invalid(name_entry.line, "`name` must be an identifier or a string")),
    };
    let dim = entries.count("dim")?.ok_or_else(|| Error::Validation("missing key `dim`".into()))?;
    if dim == 0 || dim % 2 == 1 {
        return Err(invalid(entries.get("dim")?.line, format!("symplectic dimension must be even and positive, got {dim}")));
    }
    let mu = entries.exprs("mu")?;
    let k = mu.len();
    if let Some(g) = entries.count("group_dim")? {
        if g != k {
            return Err(invalid(entries.get("group_dim")?.line, format!("group_dim {g} but mu has {k} components")));
        }
    }
    if 2 * k > dim {
        return Err(invalid(entries.get("mu")?.line, format!("{k} momentum components on a {dim}-dimensional chart")));
    }
    let quotient_dim = entries.count("quotient_dim")?.unwrap_or(dim - 2 * k);

    let xs = [('x', dim)];
    let mut fields = Vec::new();
    for key in ["omega", "metric", "acs"] {
        let m = entries.matrix(key, dim)?;
        let refs: Vec<&Expr> = m.iter().flatten().collect();
        check_idents(&refs, &xs, entries.get(key)?.line, key)?;
        fields.push(m);
    }
    let acs = fields.pop().expect("three fields");
    let metric = fields.pop().expect("three fields");
    let omega = fields.pop().expect("three fields");

    let action = entries.exprs("action")?;
    let line = entries.get("action")?.line;
    if action.len() != dim {
        return Err(invalid(line, format!("action needs {dim} components, got {}", action.len())));
    }
    check_idents(&action.iter().collect::<Vec<_>>(), &[('x', dim), ('t', k)], line, "action")?;

    check_idents(&mu.iter().collect::<Vec<_>>(), &xs, entries.get("mu")?.line, "mu")?;
    let beta = entries.constants("beta")?.ok_or_else(|| Error::Validation("missing key `beta`".into()))?;
    if beta.len() != k {
        return Err(invalid(entries.get("beta")?.line, format!("beta needs {k} components, got {}", beta.len())));
    }

    let section = entries.exprs("section")?;
    let line = entries.get("section")?.line;
    if section.len() != dim {
        return Err(invalid(line, format!("section needs {dim} components, got {}", section.len())));
    }
    check_idents(&section.iter().collect::<Vec<_>>(), &[('w', quotient_dim)], line, "section")?;

    let periods = entries.constants("period")?;
    if let Some(p) = &periods {
        if p.len() != k || p.iter().any(|v| *v <= 0.0) {
            return Err(invalid(entries.get("period")?.line, format!("period needs {k} positive entries")));
        }
    }
    let quadrature = entries.count("quadrature")?.unwrap_or(64);

    let region = match (entries.constant("samples.radius")?, entries.constants("samples.box")?) {
        (Some(_), Some(_)) => return Err(Error::Validation("give either samples.radius or samples.box".into())),
        (Some(r), None) if r > 0.0 => SampleRegion::Ball { radius: r },
        (Some(_), None) => return Err(invalid(entries.get("samples.radius")?.line, "samples.radius must be positive")),
        (None, Some(b)) if b.len() == 2 && b[0] < b[1] => SampleRegion::Box { lo: b[0], hi: b[1] },
        (None, Some(_)) => return Err(invalid(entries.get("samples.box")?.line, "samples.box must be [lo, hi] with lo < hi")),
        (None, None) => SampleRegion::Box { lo: -1.0, hi: 1.0 },
    };

    let mut sample_points = Vec::new();
    if let Some(e) = entries.0.get("samples.points") {
        let bad = || invalid(e.line, format!("samples.points must be a list of {quotient_dim}-vectors"));
        let Value::List(points) = &e.value else { return Err(bad()) };
        for pt in points {
            let coords = list_of_exprs(pt)
                .and_then(|xs| xs.iter().map(eval_constant).collect::<Option<Vec<f64>>>())
                .filter(|c| c.len() == quotient_dim && c.iter().all(|v| v.is_finite()))
                .ok_or_else(bad)?;
            sample_points.push(coords);
        }
    }

    let mut tolerances = ReductionTolerances::default();
    let slots = [
        ("tol.constraint", &mut tolerances.constraint),
        ("tol.geometric", &mut tolerances.geometric),
        ("tol.algebraic", &mut tolerances.algebraic),
        ("tol.hypothesis", &mut tolerances.hypothesis),
        ("tol.rank", &mut tolerances.rank),
    ];
    for (key, target) in slots {
        if let Some(v) = entries.constant(key)? {
            if v <= 0.0 {
                return Err(invalid(entries.get(key)?.line, format!("`{key}` must be positive")));
            }
            *target = v;
        }
    }

    Ok(ScenarioFile {
        name,
        dim,
        group_dim: k,
        quotient_dim,
        omega,
        metric,
        acs,
        action,
        mu,
        beta,
        section,
        periods,
        quadrature,
        region,
        sample_points,
        tolerances,
    })
}

/// Expression with identifiers resolved to argument slots.
#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn compile(e: &Expr, layout: &[(char, usize)]) -> Node {
        match e {
            Expr::Num(v) => Node::Const(*v),
            Expr::Var(v) if v == "pi" => Node::Const(std::f64::consts::PI),
            // identifiers were checked during validation
            Expr::Var(v) => Node::Slot(slot(v, layout).expect("validated identifier")),
            Expr::Neg(x) => Node::Neg(Box::new(Node::compile(x, layout))),
            Expr::Call(f, x) => Node::Call(*f, Box::new(Node::compile(x, layout))),
            Expr::Bin(op, l, r) => Node::Bin(
                *op,
                Box::new(Node::compile(l, layout)),
                Box::new(Node::compile(r, layout)),
            ),
        }
    }

    fn eval(&self, args: &[f64]) -> f64 {
        match self {
            Node::Const(v) => *v,
            Node::Slot(i) => args[*i],
            Node::Neg(x) => -x.eval(args),
            Node::Call(f, x) => f.apply(x.eval(args)),
            Node::Bin(op, l, r) => op.apply(l.eval(args), r.eval(args)),
        }
    }
}

fn compile_all(exprs: &[Expr], layout: &[(char, usize)]) -> Arc<Vec<Node>> {
    Arc::new(exprs.iter().map(|e| Node::compile(e, layout)).collect())
}

fn matrix_field(n: usize, m: &[Vec<Expr>]) -> TensorFieldSpec {
    let flat: Vec<Expr> = m.iter().flatten().cloned().collect();
    let nodes = compile_all(&flat, &[('x', n)]);
    TensorFieldSpec::square(n, move |p| DMatrix::from_fn(n, n, |i, j| nodes[i * n + j].eval(p)))
}

impl ScenarioFile {
    /// Build the runnable scenario.
    pub fn compile(&self) -> Result<ReductionScenario> {
        let (n, k, q) = (self.dim, self.group_dim, self.quotient_dim);
        let flow = compile_all(&self.action, &[('x', n), ('t', k)]);
        let mut action = GroupActionSpec::new(k, n, move |t, p| {
            let mut args = p.to_vec();
            args.extend_from_slice(t);
            flow.iter().map(|e| e.eval(&args)).collect()
        });
        if let Some(periods) = &self.periods {
            action = action.with_torus_quadrature(periods, self.quadrature);
        }
        let components = self
            .mu
            .iter()
            .map(|e| {
                let node = Node::compile(e, &[('x', n)]);
                TensorFieldSpec::scalar(n, move |p| node.eval(p))
            })
            .collect();
        let sec = compile_all(&self.section, &[('w', q)]);
        let section = SectionMap::new(q, n, move |w| sec.iter().map(|e| e.eval(w)).collect());
        let sample_points = self
            .sample_points
            .iter()
            .map(|p| ChartPoint::new(p.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReductionScenario {
            name: self.name.clone(),
            chart_dim: n,
            omega: matrix_field(n, &self.omega),
            metric: matrix_field(n, &self.metric),
            acs: matrix_field(n, &self.acs),
            fiber_params: default_fiber_params(&action),
            action,
            mu: MomentumMapSpec::new(components, self.beta.clone()),
            quotient_dim: q,
            section,
            quotient_region: self.region,
            sample_points,
            tolerances: self.tolerances,
        })
    }
}

//! Consistency models as data: ordered definitions plus axioms, written in
//! the relation-expression language and evaluated against executions.
//!
//! Built-in models are parsed from the `.model` files shipped with the
//! crate; the same loader accepts user files, so axioms can be changed
//! without recompiling. Elided baseline fragments (Power's `ppo`, ARMv8's
//! `dob`/`aob`/`bob`, C++'s `sw`/`psc`) are *plugged* definitions: named
//! seams resolved from a registry, so a baseline can be swapped while the
//! transactional additions stay put.

use crate::execution::{base_index, base_values, Arch, Execution, BASE_NAMES};
use crate::relalg::{acyclic, irreflexive, EvalError, EventSet, Expr, Rel, Value};
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AxiomShape {
    Acyclic,
    Irreflexive,
    Empty,
}

impl AxiomShape {
    pub fn name(self) -> &'static str {
        match self {
            AxiomShape::Acyclic => "acyclic",
            AxiomShape::Irreflexive => "irreflexive",
            AxiomShape::Empty => "empty",
        }
    }

    pub fn holds(self, r: &Rel) -> bool {
        match self {
            AxiomShape::Acyclic => acyclic(r),
            AxiomShape::Irreflexive => irreflexive(r),
            AxiomShape::Empty => r.is_empty(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Axiom {
    pub name: String,
    pub shape: AxiomShape,
    pub body: Expr,
}

#[derive(Clone, Debug)]
pub enum Definition {
    /// `let name = expr`
    Let { name: String, body: Expr },
    /// `plug name key`: bind `name` to the registered definition `key`.
    Plug { name: String, key: String },
}

impl Definition {
    pub fn name(&self) -> &str {
        match self {
            Definition::Let { name, .. } | Definition::Plug { name, .. } => name,
        }
    }
}

/// A named consistency predicate: ordered definitions then axioms, plus an
/// optional second predicate for race freedom (C++ only).
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub arch: Arch,
    pub defs: Vec<Definition>,
    pub axioms: Vec<Axiom>,
    pub race_axioms: Vec<Axiom>,
}

/// Outcome of checking one execution against one model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub consistent: bool,
    /// Every violated axiom, in model order (no short-circuiting).
    pub violated: Vec<String>,
    /// For models with a race predicate: whether the (consistent) execution
    /// is racy. `None` for inconsistent executions or raceless models.
    pub racy: Option<bool>,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum CheckError {
    #[error("model `{model}` targets {expected:?} but the execution is {got:?}")]
    Arch {
        model: String,
        expected: Arch,
        got: Arch,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Model {
    /// SC and TSC axioms only mention po/com/stxn, which every execution
    /// carries, so those models accept any architecture.
    pub fn accepts_arch(&self, a: Arch) -> bool {
        matches!(self.arch, Arch::Sc | Arch::Tsc) || self.arch.compatible_with(a)
    }

    /// Evaluate every definition, then every axiom; all violated axioms are
    /// reported. Definitions are evaluated once per call (memoisation is per
    /// model-and-execution, with no cross-call cache).
    pub fn check(&self, x: &Execution) -> Result<Verdict, CheckError> {
        self.checker()?.verdict(x)
    }

    /// Consistency only, stopping at the first violated axiom.
    pub fn consistent(&self, x: &Execution) -> Result<bool, CheckError> {
        let c = self.checker()?;
        if !self.accepts_arch(x.arch) {
            return Err(CheckError::Arch {
                model: self.name.clone(),
                expected: self.arch,
                got: x.arch,
            });
        }
        Ok(c.consistent(x))
    }

    /// Slot-compiled form for repeated checking.
    pub fn checker(&self) -> Result<Checker, CheckError> {
        Checker::new(self)
    }
}

// ---------------------------------------------------------------------------
// Plugged definitions
// ---------------------------------------------------------------------------

/// Keys accepted by `plug` lines in model files.
pub const PLUG_KEYS: [&str; 6] = [
    "power-ppo",
    "armv8-dob",
    "armv8-aob",
    "armv8-bob",
    "cpp-sw",
    "cpp-psc",
];

/// Expression bodies for the plugs that are plain definitions.
///
/// `armv8-*` follow the official ARMv8 axiomatic model's dependency, atomic
/// and barrier orders. `cpp-sw` is the RC11 synchronises-with shape, with
/// release sequences running through same-location writes and rmw chains.
/// `cpp-psc` is the RC11 SC order restricted to the access fragment (C++
/// fences are not modelled here).
fn plug_expr_source(key: &str) -> Option<&'static str> {
    Some(match key {
        "armv8-dob" => {
            "addr | data | (ctrl;[W]) | ((ctrl | (addr;po));[ISB];po;[R]) \
             | (addr;po;[W]) | ((ctrl|data);coi) | ((addr|data);rfi)"
        }
        "armv8-aob" => "rmw | ([ran(rmw)];rfi;[Acq])",
        "armv8-bob" => {
            "dmb | dmbld | dmbst | ([Rel];po;[Acq]) | ([Acq];po) | (po;[Rel]) | (po;[Rel];coi)"
        }
        "cpp-sw" => "[Rel];([F];po)?;[W];poloc*;[W&Ato];(rf;rmw)*;rf;[R&Ato];(po;[F])?;[Acq]",
        "cpp-psc" => "[SC];(po | (podloc;hb;podloc) | (hb&sloc) | co | fr);[SC]",
        _ => return None,
    })
}

/// Preserved program order for Power: the ii/ic/ci/cc mutual fixpoint over
/// dependencies, same-location restarts and internal reads-from, restricted
/// to read-to-read and read-to-write pairs.
fn power_ppo(get: &dyn Fn(&str) -> Result<Value, EvalError>) -> Result<Rel, EvalError> {
    let rel = |n: &str| -> Result<Rel, EvalError> {
        get(n)?.as_rel().ok_or_else(|| EvalError::Name(n.to_string()))
    };
    let set = |n: &str| -> Result<EventSet, EvalError> {
        get(n)?.as_set().ok_or_else(|| EvalError::Name(n.to_string()))
    };
    let po = rel("po")?;
    let poloc = rel("poloc")?;
    let addr = rel("addr")?;
    let data = rel("data")?;
    let ctrl = rel("ctrl")?;
    let rfi = rel("rfi")?;
    let rfe = rel("rfe")?;
    let fre = rel("fre")?;
    let coe = rel("coe")?;
    let isync_events = Rel::lift_set(&set("ISYNC")?);
    let reads = set("R")?;
    let writes = set("W")?;

    let dd = addr.union(&data);
    let rdw = poloc.inter(&fre.seq(&rfe));
    let detour = poloc.inter(&coe.seq(&rfe));
    let addrpo = addr.seq(&po);
    let ctrlisync = ctrl.seq(&isync_events).seq(&po);

    let ii0 = dd.union(&rdw).union(&rfi);
    let ci0 = ctrlisync.union(&detour);
    let cc0 = dd.union(&poloc).union(&ctrl).union(&addrpo);

    let n = po.universe_size();
    let mut ii = ii0;
    let mut ic = Rel::empty(n);
    let mut ci = ci0;
    let mut cc = cc0;
    loop {
        let ii2 = ii0.union(&ci).union(&ic.seq(&ci)).union(&ii.seq(&ii));
        let ic2 = ic.union(&ii).union(&cc).union(&ic.seq(&cc)).union(&ii.seq(&ic));
        let ci2 = ci0.union(&ci.seq(&ii)).union(&cc.seq(&ci));
        let cc2 = cc0.union(&ci).union(&ci.seq(&ic)).union(&cc.seq(&cc));
        if ii2 == ii && ic2 == ic && ci2 == ci && cc2 == cc {
            break;
        }
        ii = ii2;
        ic = ic2;
        ci = ci2;
        cc = cc2;
    }
    let rr = Rel::cross(&reads, &reads);
    let rw = Rel::cross(&reads, &writes);
    Ok(ii.inter(&rr).union(&ic.inter(&rw)))
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("model parse error at line {line}: {msg}")]
pub struct ModelParseError {
    pub line: usize,
    pub msg: String,
}

/// Parse a model file: `model NAME`, `arch A`, then `plug`/`let` bindings
/// in evaluation order, then `axiom SHAPE NAME EXPR` and
/// `race axiom SHAPE NAME EXPR` lines.
pub fn parse_model(text: &str) -> Result<Model, ModelParseError> {
    let mut name = None;
    let mut arch = None;
    let mut defs = Vec::new();
    let mut axioms = Vec::new();
    let mut race_axioms = Vec::new();
    for (lno, raw) in text.lines().enumerate() {
        let lno = lno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let oops = |msg: String| ModelParseError { line: lno, msg };
        if let Some(rest) = line.strip_prefix("model ") {
            name = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("arch ") {
            arch = Some(
                Arch::from_name(rest.trim())
                    .ok_or_else(|| oops(format!("unknown architecture `{}`", rest.trim())))?,
            );
        } else if let Some(rest) = line.strip_prefix("plug ") {
            let mut parts = rest.split_whitespace();
            let dname = parts.next().ok_or_else(|| oops("plug needs a name".into()))?;
            let key = parts
                .next()
                .ok_or_else(|| oops("plug needs a registry key".into()))?;
            if !PLUG_KEYS.contains(&key) {
                return Err(oops(format!("unknown plug key `{key}`")));
            }
            defs.push(Definition::Plug {
                name: dname.to_string(),
                key: key.to_string(),
            });
        } else if let Some(rest) = line.strip_prefix("let ") {
            let (dname, body) = rest
                .split_once('=')
                .ok_or_else(|| oops("let needs `name = expr`".into()))?;
            let body = crate::relalg::parse_expr(body.trim())
                .map_err(|e| oops(format!("in `{}`: {e}", dname.trim())))?;
            defs.push(Definition::Let {
                name: dname.trim().to_string(),
                body,
            });
        } else if line.starts_with("race axiom ") || line.starts_with("axiom ") {
            let is_race = line.starts_with("race");
            let rest = line
                .strip_prefix("race axiom ")
                .or_else(|| line.strip_prefix("axiom "))
                .unwrap();
            let mut parts = rest.splitn(3, char::is_whitespace);
            let shape = match parts.next() {
                Some("acyclic") => AxiomShape::Acyclic,
                Some("irreflexive") => AxiomShape::Irreflexive,
                Some("empty") => AxiomShape::Empty,
                s => return Err(oops(format!("unknown axiom shape {s:?}"))),
            };
            let aname = parts.next().ok_or_else(|| oops("axiom needs a name".into()))?;
            let body = parts
                .next()
                .ok_or_else(|| oops("axiom needs an expression".into()))?;
            let body = crate::relalg::parse_expr(body)
                .map_err(|e| oops(format!("in axiom {aname}: {e}")))?;
            let ax = Axiom {
                name: aname.to_string(),
                shape,
                body,
            };
            if is_race {
                race_axioms.push(ax);
            } else {
                axioms.push(ax);
            }
        } else {
            return Err(oops(format!("unknown statement `{line}`")));
        }
    }
    Ok(Model {
        name: name.ok_or(ModelParseError {
            line: 1,
            msg: "missing `model` line".into(),
        })?,
        arch: arch.ok_or(ModelParseError {
            line: 1,
            msg: "missing `arch` line".into(),
        })?,
        defs,
        axioms,
        race_axioms,
    })
}

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

macro_rules! builtin {
    ($file:literal) => {
        include_str!(concat!("../models/", $file))
    };
}

const BUILTIN_SOURCES: [(&str, &str); 10] = [
    ("sc", builtin!("sc.model")),
    ("tsc", builtin!("tsc.model")),
    ("x86", builtin!("x86.model")),
    ("x86-tm", builtin!("x86-tm.model")),
    ("power", builtin!("power.model")),
    ("power-tm", builtin!("power-tm.model")),
    ("armv8", builtin!("armv8.model")),
    ("armv8-tm", builtin!("armv8-tm.model")),
    ("cpp", builtin!("cpp.model")),
    ("cpp-tm", builtin!("cpp-tm.model")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN_SOURCES.iter().map(|(n, _)| *n).collect()
}

/// Look up a model by name. `base+axiom` composes add-on axioms onto a
/// base model: `sc+strongisol`, `sc+weakisol`, `armv8-tm+crorder`,
/// `power+txnorder`, ...
pub fn by_name(name: &str) -> Option<Model> {
    let mut parts = name.split('+');
    let base = parts.next()?;
    let (_, src) = BUILTIN_SOURCES.iter().find(|(n, _)| *n == base)?;
    let mut m = parse_model(src).expect("built-in model parses");
    for part in parts {
        let ax = match part {
            "strongisol" => axiom_strong_isol(),
            "weakisol" => axiom_weak_isol(),
            "txnorder" => axiom_txn_order(hb_expr_of(&m)),
            "crorder" => axiom_cr_order(),
            _ => return None,
        };
        m.axioms.push(ax);
        m.name = format!("{}+{part}", m.name);
    }
    Some(m)
}

fn hb_expr_of(m: &Model) -> Expr {
    if m.defs.iter().any(|d| d.name() == "hb") {
        Expr::name("hb")
    } else if m.defs.iter().any(|d| d.name() == "ob") {
        Expr::name("ob")
    } else {
        Expr::Union(Arc::new(Expr::name("po")), Arc::new(Expr::name("com")))
    }
}

pub fn model_sc() -> Model {
    by_name("sc").unwrap()
}
pub fn model_tsc() -> Model {
    by_name("tsc").unwrap()
}
pub fn model_x86() -> Model {
    by_name("x86").unwrap()
}
pub fn model_x86_tm() -> Model {
    by_name("x86-tm").unwrap()
}
pub fn model_power() -> Model {
    by_name("power").unwrap()
}
pub fn model_power_tm() -> Model {
    by_name("power-tm").unwrap()
}
pub fn model_armv8() -> Model {
    by_name("armv8").unwrap()
}
pub fn model_armv8_tm() -> Model {
    by_name("armv8-tm").unwrap()
}
pub fn model_cpp() -> Model {
    by_name("cpp").unwrap()
}
pub fn model_cpp_tm() -> Model {
    by_name("cpp-tm").unwrap()
}

/// The transaction-free baseline a TM model is compared against.
pub fn baseline_of(m: &Model) -> Option<Model> {
    match m.name.strip_suffix("-tm") {
        Some(base) => by_name(base),
        None if m.name == "tsc" => Some(model_sc()),
        None => None,
    }
}

// Reusable axiom constructors shared across models.

pub fn axiom_weak_isol() -> Axiom {
    Axiom {
        name: "WeakIsol".into(),
        shape: AxiomShape::Acyclic,
        body: crate::relalg::parse_expr("weaklift(com,stxn)").unwrap(),
    }
}

pub fn axiom_strong_isol() -> Axiom {
    Axiom {
        name: "StrongIsol".into(),
        shape: AxiomShape::Acyclic,
        body: crate::relalg::parse_expr("stronglift(com,stxn)").unwrap(),
    }
}

pub fn axiom_txn_order(hb: Expr) -> Axiom {
    Axiom {
        name: "TxnOrder".into(),
        shape: AxiomShape::Acyclic,
        body: Expr::StrongLift(Arc::new(hb), Arc::new(Expr::name("stxn"))),
    }
}

/// Serialisability of critical regions: `acyclic(weaklift(po|com, scr))`.
pub fn axiom_cr_order() -> Axiom {
    Axiom {
        name: "CROrder".into(),
        shape: AxiomShape::Acyclic,
        body: crate::relalg::parse_expr("weaklift(po | com, scr)").unwrap(),
    }
}

// ---------------------------------------------------------------------------
// Compiled checker
// ---------------------------------------------------------------------------

/// Slot-compiled form of a model: names resolved to indices into a flat
/// value table, no hashing at evaluation time. Verdicts agree with the
/// interpreted route by construction (same expressions, same order).
pub struct Checker {
    name: String,
    arch: Arch,
    programs: Vec<(usize, CBody)>,
    axioms: Vec<(String, AxiomShape, CExpr)>,
    race_axioms: Vec<(String, AxiomShape, CExpr)>,
    slot_count: usize,
}

enum CBody {
    Expr(CExpr),
    PowerPpo,
}

enum CExpr {
    Slot(usize),
    Union(Box<CExpr>, Box<CExpr>),
    Inter(Box<CExpr>, Box<CExpr>),
    Diff(Box<CExpr>, Box<CExpr>),
    Seq(Box<CExpr>, Box<CExpr>),
    Cross(Box<CExpr>, Box<CExpr>),
    Inverse(Box<CExpr>),
    Complement(Box<CExpr>),
    RClos(Box<CExpr>),
    TClos(Box<CExpr>),
    RTClos(Box<CExpr>),
    Lift(Box<CExpr>),
    Domain(Box<CExpr>),
    Range(Box<CExpr>),
    WeakLift(Box<CExpr>, Box<CExpr>),
    StrongLift(Box<CExpr>, Box<CExpr>),
}

struct NameTable {
    map: HashMap<String, usize>,
    next: usize,
}

impl NameTable {
    fn new() -> NameTable {
        let map = BASE_NAMES
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect();
        NameTable {
            map,
            next: BASE_NAMES.len(),
        }
    }

    fn lookup(&self, name: &str) -> Result<usize, EvalError> {
        self.map
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::Name(name.to_string()))
    }

    /// Bind (or shadow) a definition name with a fresh slot.
    fn bind(&mut self, name: &str) -> usize {
        let slot = self.next;
        self.next += 1;
        self.map.insert(name.to_string(), slot);
        slot
    }
}

impl Checker {
    pub fn new(model: &Model) -> Result<Checker, CheckError> {
        let mut names = NameTable::new();
        let mut programs = Vec::new();
        for def in &model.defs {
            let body = match def {
                Definition::Let { body, .. } => CBody::Expr(compile(body, &names)?),
                Definition::Plug { key, .. } if key == "power-ppo" => CBody::PowerPpo,
                Definition::Plug { key, .. } => {
                    let src = plug_expr_source(key)
                        .ok_or_else(|| EvalError::Name(format!("plug:{key}")))?;
                    let expr = crate::relalg::parse_expr(src).expect("plug expression parses");
                    CBody::Expr(compile(&expr, &names)?)
                }
            };
            let slot = names.bind(def.name());
            programs.push((slot, body));
        }
        let compile_ax = |axs: &[Axiom]| -> Result<Vec<(String, AxiomShape, CExpr)>, CheckError> {
            axs.iter()
                .map(|a| Ok((a.name.clone(), a.shape, compile(&a.body, &names)?)))
                .collect()
        };
        let axioms = compile_ax(&model.axioms)?;
        let race_axioms = compile_ax(&model.race_axioms)?;
        Ok(Checker {
            name: model.name.clone(),
            arch: model.arch,
            programs,
            axioms,
            race_axioms,
            slot_count: names.next,
        })
    }

    pub fn model_name(&self) -> &str {
        &self.name
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn accepts_arch(&self, a: Arch) -> bool {
        matches!(self.arch, Arch::Sc | Arch::Tsc) || self.arch.compatible_with(a)
    }

    fn fill(&self, x: &Execution, slots: &mut Vec<Value>) -> Result<(), EvalError> {
        slots.clear();
        slots.extend(base_values(x));
        slots.resize(self.slot_count, Value::Rel(Rel::empty(x.len())));
        for (slot, body) in &self.programs {
            let v = match body {
                CBody::Expr(c) => eval_compiled(c, slots)?,
                CBody::PowerPpo => {
                    let get = |n: &str| -> Result<Value, EvalError> {
                        base_index(n)
                            .map(|i| slots[i])
                            .ok_or_else(|| EvalError::Name(n.to_string()))
                    };
                    Value::Rel(power_ppo(&get)?)
                }
            };
            slots[*slot] = v;
        }
        Ok(())
    }

    pub fn verdict(&self, x: &Execution) -> Result<Verdict, CheckError> {
        if !self.accepts_arch(x.arch) {
            return Err(CheckError::Arch {
                model: self.name.clone(),
                expected: self.arch,
                got: x.arch,
            });
        }
        let mut slots = Vec::new();
        self.fill(x, &mut slots)?;
        let mut violated = Vec::new();
        for (name, shape, body) in &self.axioms {
            let r = as_rel(eval_compiled(body, &slots)?)?;
            if !shape.holds(&r) {
                violated.push(name.clone());
            }
        }
        let consistent = violated.is_empty();
        let racy = if self.race_axioms.is_empty() || !consistent {
            None
        } else {
            let mut racy = false;
            for (_, shape, body) in &self.race_axioms {
                let r = as_rel(eval_compiled(body, &slots)?)?;
                if !shape.holds(&r) {
                    racy = true;
                }
            }
            Some(racy)
        };
        Ok(Verdict {
            consistent,
            violated,
            racy,
        })
    }

    /// Early-exit consistency check. The execution's architecture must
    /// already be compatible.
    pub fn consistent(&self, x: &Execution) -> bool {
        debug_assert!(self.accepts_arch(x.arch));
        let mut slots = Vec::new();
        if self.fill(x, &mut slots).is_err() {
            return false;
        }
        self.axioms.iter().all(|(_, shape, body)| {
            matches!(eval_compiled(body, &slots).ok().and_then(|v| v.as_rel()),
                     Some(r) if shape.holds(&r))
        })
    }

    /// Race verdict on an execution already known to be consistent.
    pub fn racy(&self, x: &Execution) -> Result<bool, CheckError> {
        let mut slots = Vec::new();
        self.fill(x, &mut slots)?;
        for (_, shape, body) in &self.race_axioms {
            let r = as_rel(eval_compiled(body, &slots)?)?;
            if !shape.holds(&r) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn as_rel(v: Value) -> Result<Rel, EvalError> {
    v.as_rel().ok_or(EvalError::Kind {
        op: "axiom",
        expected: "relation",
        got: "set",
    })
}

fn compile(e: &Expr, names: &NameTable) -> Result<CExpr, EvalError> {
    use Expr::*;
    Ok(match e {
        Name(n) => CExpr::Slot(names.lookup(n)?),
        Union(a, b) => CExpr::Union(Box::new(compile(a, names)?), Box::new(compile(b, names)?)),
        Inter(a, b) => CExpr::Inter(Box::new(compile(a, names)?), Box::new(compile(b, names)?)),
        Diff(a, b) => CExpr::Diff(Box::new(compile(a, names)?), Box::new(compile(b, names)?)),
        Seq(a, b) => CExpr::Seq(Box::new(compile(a, names)?), Box::new(compile(b, names)?)),
        Cross(a, b) => CExpr::Cross(Box::new(compile(a, names)?), Box::new(compile(b, names)?)),
        Inverse(a) => CExpr::Inverse(Box::new(compile(a, names)?)),
        Complement(a) => CExpr::Complement(Box::new(compile(a, names)?)),
        RClos(a) => CExpr::RClos(Box::new(compile(a, names)?)),
        TClos(a) => CExpr::TClos(Box::new(compile(a, names)?)),
        RTClos(a) => CExpr::RTClos(Box::new(compile(a, names)?)),
        Lift(a) => CExpr::Lift(Box::new(compile(a, names)?)),
        Domain(a) => CExpr::Domain(Box::new(compile(a, names)?)),
        Range(a) => CExpr::Range(Box::new(compile(a, names)?)),
        WeakLift(a, b) => {
            CExpr::WeakLift(Box::new(compile(a, names)?), Box::new(compile(b, names)?))
        }
        StrongLift(a, b) => {
            CExpr::StrongLift(Box::new(compile(a, names)?), Box::new(compile(b, names)?))
        }
    })
}

fn eval_compiled(e: &CExpr, slots: &[Value]) -> Result<Value, EvalError> {
    use CExpr::*;
    let rel = |v: Value| {
        v.as_rel().ok_or(EvalError::Kind {
            op: "op",
            expected: "relation",
            got: "set",
        })
    };
    let setv = |v: Value| {
        v.as_set().ok_or(EvalError::Kind {
            op: "op",
            expected: "set",
            got: "relation",
        })
    };
    Ok(match e {
        Slot(i) => slots[*i],
        Union(a, b) => match (eval_compiled(a, slots)?, eval_compiled(b, slots)?) {
            (Value::Rel(x), Value::Rel(y)) => Value::Rel(x.union(&y)),
            (Value::Set(x), Value::Set(y)) => Value::Set(x.union(&y)),
            _ => {
                return Err(EvalError::Kind {
                    op: "|",
                    expected: "matching kinds",
                    got: "mixed",
                })
            }
        },
        Inter(a, b) => match (eval_compiled(a, slots)?, eval_compiled(b, slots)?) {
            (Value::Rel(x), Value::Rel(y)) => Value::Rel(x.inter(&y)),
            (Value::Set(x), Value::Set(y)) => Value::Set(x.inter(&y)),
            _ => {
                return Err(EvalError::Kind {
                    op: "&",
                    expected: "matching kinds",
                    got: "mixed",
                })
            }
        },
        Diff(a, b) => match (eval_compiled(a, slots)?, eval_compiled(b, slots)?) {
            (Value::Rel(x), Value::Rel(y)) => Value::Rel(x.diff(&y)),
            (Value::Set(x), Value::Set(y)) => Value::Set(x.diff(&y)),
            _ => {
                return Err(EvalError::Kind {
                    op: "\\",
                    expected: "matching kinds",
                    got: "mixed",
                })
            }
        },
        Seq(a, b) => {
            Value::Rel(rel(eval_compiled(a, slots)?)?.seq(&rel(eval_compiled(b, slots)?)?))
        }
        Cross(a, b) => Value::Rel(Rel::cross(
            &setv(eval_compiled(a, slots)?)?,
            &setv(eval_compiled(b, slots)?)?,
        )),
        Inverse(a) => Value::Rel(rel(eval_compiled(a, slots)?)?.inverse()),
        Complement(a) => match eval_compiled(a, slots)? {
            Value::Rel(r) => Value::Rel(r.complement()),
            Value::Set(s) => Value::Set(s.complement()),
        },
        RClos(a) => Value::Rel(rel(eval_compiled(a, slots)?)?.rclos()),
        TClos(a) => Value::Rel(rel(eval_compiled(a, slots)?)?.tclos()),
        RTClos(a) => Value::Rel(rel(eval_compiled(a, slots)?)?.rtclos()),
        Lift(a) => Value::Rel(Rel::lift_set(&setv(eval_compiled(a, slots)?)?)),
        Domain(a) => Value::Set(rel(eval_compiled(a, slots)?)?.domain()),
        Range(a) => Value::Set(rel(eval_compiled(a, slots)?)?.range()),
        WeakLift(a, b) => Value::Rel(crate::relalg::weaklift(
            &rel(eval_compiled(a, slots)?)?,
            &rel(eval_compiled(b, slots)?)?,
        )),
        StrongLift(a, b) => Value::Rel(crate::relalg::stronglift(
            &rel(eval_compiled(a, slots)?)?,
            &rel(eval_compiled(b, slots)?)?,
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::deserialize;

    fn exec(src: &str) -> Execution {
        let doc = deserialize(src).unwrap();
        let rep = crate::execution::validate_wellformed(&doc.execution);
        assert!(rep.ok(), "{rep}");
        doc.execution
    }

    fn fig2() -> Execution {
        exec(
            "arch tsc\n\
             event 0 W x 1\n\
             event 1 R x 2\n\
             event 2 W x 2\n\
             thread 0 1\n\
             thread 2\n\
             rf 2 1\n\
             co 0 2\n\
             stxn { 0 1 }\n",
        )
    }

    #[test]
    fn builtin_models_parse_and_compile() {
        for name in builtin_names() {
            let m = by_name(name).unwrap();
            m.checker().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn fig2_inconsistent_under_tsc_consistent_under_sc() {
        let x = fig2();
        let v = model_tsc().check(&x).unwrap();
        assert!(!v.consistent);
        assert_eq!(v.violated, vec!["TxnOrder".to_string()]);
        let v = model_sc().check(&x).unwrap();
        assert!(v.consistent);
    }

    #[test]
    fn sb_inconsistent_under_sc() {
        let x = exec(
            "arch sc\n\
             event 0 W x 1\n\
             event 1 R y 0\n\
             event 2 W y 1\n\
             event 3 R x 0\n\
             thread 0 1\n\
             thread 2 3\n",
        );
        assert!(!model_sc().consistent(&x).unwrap());
    }

    fn fig5(which: char) -> Execution {
        // Four SC executions allowed by weak isolation, forbidden by strong.
        let src = match which {
            'a' => {
                "arch tsc\nevent 0 R x 0\nevent 1 R x 1\nevent 2 W x 1\n\
                 thread 0 1\nthread 2\nrf 2 1\nstxn { 0 1 }\n"
            }
            'b' => {
                "arch tsc\nevent 0 R x 0\nevent 1 W x 2\nevent 2 W x 1\n\
                 thread 0 1\nthread 2\nco 2 1\nstxn { 0 1 }\n"
            }
            'c' => {
                "arch tsc\nevent 0 W x 1\nevent 1 R x 2\nevent 2 W x 2\n\
                 thread 0 1\nthread 2\nco 0 2\nrf 2 1\nstxn { 0 1 }\n"
            }
            _ => {
                "arch tsc\nevent 0 W x 1\nevent 1 W x 2\nevent 2 R x 1\n\
                 thread 0 1\nthread 2\nco 0 1\nrf 0 2\nstxn { 0 1 }\n"
            }
        };
        exec(src)
    }

    #[test]
    fn fig5_separates_weak_and_strong_isolation() {
        for which in ['a', 'b', 'c', 'd'] {
            let x = fig5(which);
            let strong = by_name("sc+strongisol").unwrap().check(&x).unwrap();
            assert!(!strong.consistent, "fig5{which} should fail StrongIsol");
            assert!(strong.violated.contains(&"StrongIsol".to_string()));
            let weak = by_name("sc+weakisol").unwrap().check(&x).unwrap();
            assert!(weak.consistent, "fig5{which} should pass WeakIsol");
        }
    }

    #[test]
    fn weak_isolation_fires_when_interferer_is_transactional() {
        // Fig-5(a) shape with the interfering write inside its own txn.
        let x = exec(
            "arch tsc\nevent 0 R x 0\nevent 1 R x 1\nevent 2 W x 1\n\
             thread 0 1\nthread 2\nrf 2 1\nstxn { 0 1 }\nstxn { 2 }\n",
        );
        let weak = by_name("sc+weakisol").unwrap().check(&x).unwrap();
        assert!(!weak.consistent);
    }

    #[test]
    fn empty_stxn_makes_isolation_vacuous() {
        let x = exec(
            "arch tsc\nevent 0 W x 1\nevent 1 R x 1\nthread 0\nthread 1\nrf 0 1\n",
        );
        assert!(by_name("sc+strongisol").unwrap().consistent(&x).unwrap());
        assert!(by_name("sc+weakisol").unwrap().consistent(&x).unwrap());
    }

    #[test]
    fn checker_agrees_with_interpreter_on_fig2() {
        let x = fig2();
        for name in builtin_names() {
            let m = by_name(name).unwrap();
            if !m.accepts_arch(x.arch) {
                continue;
            }
            let via_env = {
                // interpreted route: fold defs through the env by hand
                let mut env = x.env();
                for def in &m.defs {
                    let v = match def {
                        Definition::Let { body, .. } => body.eval(&env).unwrap(),
                        Definition::Plug { .. } => continue,
                    };
                    env.insert(def.name().to_string(), v);
                }
                let mut violated = Vec::new();
                for ax in &m.axioms {
                    let r = ax.body.eval(&env).unwrap().as_rel().unwrap();
                    if !ax.shape.holds(&r) {
                        violated.push(ax.name.clone());
                    }
                }
                violated
            };
            let via_checker = m.check(&x).unwrap().violated;
            assert_eq!(via_env, via_checker, "{name}");
        }
    }

    #[test]
    fn arch_mismatch_is_an_error() {
        let x = fig2();
        assert!(matches!(
            model_x86().check(&x),
            Err(CheckError::Arch { .. })
        ));
    }
}

//! Grounding: typed entity pools, the proposition universe, ground operators
//! and abstract-belief manipulation.
//!
//! The proposition universe is the set of all type-correct groundings of the
//! declared predicates over the current entity pools. It grows monotonically
//! as entities are added (progressive widening); new propositions are false
//! in existing abstract beliefs, which makes belief values stable across
//! growth.

use super::ast::*;
use super::DomainError;
use indexmap::IndexSet;
use smallvec::SmallVec;
use std::collections::HashMap;
use std::fmt::Write as _;

pub type TypeId = u32;
pub type EntId = u32;
pub type PredId = u32;
pub type PropId = u32;
pub type OpId = u32;

/// Joint assignment to an operator's uncertain effects (or conditions):
/// bit `i` is the truth value of the `i`-th proposition in the operator's
/// `ueff` (resp. `ucond`) list.
pub type OutcomeBits = u16;

/// A grounded predicate application, interned by id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition {
    pub pred: PredId,
    pub args: SmallVec<[EntId; 3]>,
}

/// Total boolean assignment over the proposition universe, stored as the
/// sorted set of true proposition ids. Propositions beyond the stored set
/// read as false, so beliefs created before a universe expansion compare
/// equal to their extensions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractBelief {
    bits: Vec<PropId>,
}

impl AbstractBelief {
    pub fn empty() -> Self {
        AbstractBelief { bits: Vec::new() }
    }

    pub fn from_true_props(props: impl IntoIterator<Item = PropId>) -> Self {
        let mut bits: Vec<PropId> = props.into_iter().collect();
        bits.sort_unstable();
        bits.dedup();
        AbstractBelief { bits }
    }

    #[inline]
    pub fn get(&self, p: PropId) -> bool {
        self.bits.binary_search(&p).is_ok()
    }

    pub fn set(&mut self, p: PropId, value: bool) {
        match self.bits.binary_search(&p) {
            Ok(i) => {
                if !value {
                    self.bits.remove(i);
                }
            }
            Err(i) => {
                if value {
                    self.bits.insert(i, p);
                }
            }
        }
    }

    /// Ids of the true propositions, ascending.
    pub fn true_props(&self) -> &[PropId] {
        &self.bits
    }

    pub fn count_true(&self) -> usize {
        self.bits.len()
    }

    /// Fixed-width 0/1 string over the first `universe_len` propositions.
    pub fn bit_string(&self, universe_len: usize) -> String {
        let mut s = String::with_capacity(universe_len);
        for p in 0..universe_len as PropId {
            s.push(if self.get(p) { '1' } else { '0' });
        }
        s
    }
}

/// A goal or axiom condition with quantifiers expanded over the pools.
#[derive(Debug, Clone, PartialEq)]
pub enum CompiledFormula {
    Const(bool),
    Prop(PropId),
    Not(Box<CompiledFormula>),
    And(Vec<CompiledFormula>),
    Or(Vec<CompiledFormula>),
}

impl CompiledFormula {
    pub fn eval(&self, b: &AbstractBelief) -> bool {
        match self {
            CompiledFormula::Const(v) => *v,
            CompiledFormula::Prop(p) => b.get(*p),
            CompiledFormula::Not(x) => !x.eval(b),
            CompiledFormula::And(xs) => xs.iter().all(|x| x.eval(b)),
            CompiledFormula::Or(xs) => xs.iter().any(|x| x.eval(b)),
        }
    }
}

/// An operator schema bound to concrete entities. The pair
/// `(schema, bindings)` identifies both the operator and the controller the
/// environment runs for it; equality and hashing use only that pair.
#[derive(Debug, Clone)]
pub struct GroundOperator {
    pub schema_idx: usize,
    pub name: String,
    pub bindings: SmallVec<[EntId; 4]>,
    pub pre: Vec<(PropId, bool)>,
    pub eff: Vec<(PropId, bool)>,
    /// Propositions conditioning the uncertain-effect distribution. May grow
    /// at runtime from controller feedback.
    pub ucond: Vec<PropId>,
    pub ueff: Vec<PropId>,
}

impl PartialEq for GroundOperator {
    fn eq(&self, other: &Self) -> bool {
        self.schema_idx == other.schema_idx && self.bindings == other.bindings
    }
}
impl Eq for GroundOperator {}
impl std::hash::Hash for GroundOperator {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.schema_idx.hash(state);
        self.bindings.hash(state);
    }
}

#[derive(Debug, Clone)]
struct PredEntry {
    name: String,
    arg_types: Vec<Option<TypeId>>,
    /// Index into `domain.axioms` when this predicate is derived (possibly a
    /// partial-arity use of the axiom).
    axiom: Option<usize>,
}

/// A domain grounded against typed entity pools: the proposition universe,
/// the ground operator set and compiled goal/axioms.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: Domain,
    types: IndexSet<String>,
    entities: IndexSet<String>,
    entity_ty: Vec<TypeId>,
    pools: Vec<Vec<EntId>>,
    all_entities: Vec<EntId>,
    preds: Vec<PredEntry>,
    pred_lookup: HashMap<(String, usize), PredId>,
    props: IndexSet<Proposition>,
    prop_derived: Vec<bool>,
    /// Derived propositions with their compiled conditions, in evaluation
    /// order (axiom declaration order, then grounding order).
    derived: Vec<(PropId, CompiledFormula)>,
    pub operators: Vec<GroundOperator>,
    op_lookup: HashMap<(usize, SmallVec<[EntId; 4]>), OpId>,
    ops_by_pre: HashMap<PropId, Vec<OpId>>,
    ops_unindexed: Vec<OpId>,
    goal: CompiledFormula,
}

impl Problem {
    /// Grounds `domain` against the given typed entity pools. Schemata whose
    /// parameter types have no entities yet are skipped (progressive widening
    /// populates them later).
    pub fn new(
        domain: Domain,
        pools: &[(String, Vec<String>)],
    ) -> Result<Problem, DomainError> {
        let mut p = Problem {
            domain,
            types: IndexSet::new(),
            entities: IndexSet::new(),
            entity_ty: Vec::new(),
            pools: Vec::new(),
            all_entities: Vec::new(),
            preds: Vec::new(),
            pred_lookup: HashMap::new(),
            props: IndexSet::new(),
            prop_derived: Vec::new(),
            derived: Vec::new(),
            operators: Vec::new(),
            op_lookup: HashMap::new(),
            ops_by_pre: HashMap::new(),
            ops_unindexed: Vec::new(),
            goal: CompiledFormula::Const(false),
        };

        let domain_types: Vec<String> = p.domain.types.clone();
        for t in domain_types {
            p.intern_type(&t);
        }
        for (ty, ents) in pools {
            let tid = p.intern_type(ty);
            for e in ents {
                p.push_entity(tid, e)?;
            }
        }

        p.register_predicates()?;
        p.rebuild_universe()?;
        p.recompile()?;

        for i in 0..p.domain.schemata.len() {
            match p.ground_schema(i) {
                Ok(_) => {}
                Err(DomainError::MissingPool(_)) => {} // widened in later
                Err(e) => return Err(e),
            }
        }
        Ok(p)
    }

    fn intern_type(&mut self, name: &str) -> TypeId {
        let (i, fresh) = self.types.insert_full(name.to_string());
        if fresh {
            self.pools.push(Vec::new());
        }
        i as TypeId
    }

    fn push_entity(&mut self, ty: TypeId, name: &str) -> Result<EntId, DomainError> {
        if self.entities.contains(name) {
            return Err(DomainError::Semantic {
                msg: format!("duplicate entity `{name}`"),
                line: 0,
                col: 0,
            });
        }
        let (i, _) = self.entities.insert_full(name.to_string());
        self.entity_ty.push(ty);
        self.pools[ty as usize].push(i as EntId);
        self.all_entities.push(i as EntId);
        Ok(i as EntId)
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types.get_index_of(name).map(|i| i as TypeId)
    }

    pub fn entity_id(&self, name: &str) -> Option<EntId> {
        self.entities.get_index_of(name).map(|i| i as EntId)
    }

    pub fn entity_name(&self, id: EntId) -> &str {
        self.entities.get_index(id as usize).unwrap()
    }

    pub fn entity_type(&self, id: EntId) -> TypeId {
        self.entity_ty[id as usize]
    }

    pub fn pool(&self, ty: TypeId) -> &[EntId] {
        &self.pools[ty as usize]
    }

    fn pool_or_all(&self, ty: &Option<TypeId>) -> &[EntId] {
        match ty {
            Some(t) => &self.pools[*t as usize],
            None => &self.all_entities,
        }
    }

    /// Registers base predicates and derived (axiom) predicates at every
    /// arity they are referenced with.
    fn register_predicates(&mut self) -> Result<(), DomainError> {
        let preds = self.domain.predicates.clone();
        for ps in &preds {
            let tys = ps
                .arg_types
                .iter()
                .map(|t| t.as_ref().map(|t| self.intern_type(t)))
                .collect();
            self.add_pred(ps.name.clone(), tys, None);
        }

        // scan for axiom references to find the used arities
        let mut used: Vec<(String, usize)> = Vec::new();
        {
            let dom = &self.domain;
            let axiom_names: Vec<&str> = dom.axioms.iter().map(|a| a.name.as_str()).collect();
            let note = |a: &Atom, used: &mut Vec<(String, usize)>| {
                if axiom_names.contains(&a.pred.as_str()) {
                    let key = (a.pred.clone(), a.args.len());
                    if !used.contains(&key) {
                        used.push(key);
                    }
                }
            };
            fn walk(f: &Formula, note: &mut dyn FnMut(&Atom)) {
                match f {
                    Formula::Atom(a) => note(a),
                    Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|x| walk(x, note)),
                    Formula::Not(x) => walk(x, note),
                    Formula::Imply(a, b) => {
                        walk(a, note);
                        walk(b, note);
                    }
                    Formula::Exists(_, x) | Formula::Forall(_, x) => walk(x, note),
                    Formula::Eq(_, _) => {}
                }
            }
            for s in &dom.schemata {
                for l in &s.pre {
                    note(&l.atom, &mut used);
                }
                for a in &s.ucond {
                    note(a, &mut used);
                }
            }
            for ax in &dom.axioms {
                walk(&ax.condition, &mut |a| note(a, &mut used));
            }
            if let Some(goal) = &dom.goal {
                walk(goal, &mut |a| note(a, &mut used));
            }
        }

        let axioms = self.domain.axioms.clone();
        for (idx, ax) in axioms.iter().enumerate() {
            for (name, arity) in used.iter().filter(|(n, _)| n == &ax.name) {
                let tys = ax.params[..*arity]
                    .iter()
                    .map(|p| Some(self.intern_type(&p.ty)))
                    .collect();
                self.add_pred(name.clone(), tys, Some(idx));
            }
        }
        Ok(())
    }

    fn add_pred(&mut self, name: String, arg_types: Vec<Option<TypeId>>, axiom: Option<usize>) {
        let id = self.preds.len() as PredId;
        self.pred_lookup.insert((name.clone(), arg_types.len()), id);
        self.preds.push(PredEntry { name, arg_types, axiom });
    }

    /// Enumerates every type-correct grounding of every predicate, appending
    /// any new propositions to the universe.
    fn rebuild_universe(&mut self) -> Result<(), DomainError> {
        for pid in 0..self.preds.len() {
            let entry = self.preds[pid].clone();
            let pools: Vec<Vec<EntId>> = entry
                .arg_types
                .iter()
                .map(|t| self.pool_or_all(t).to_vec())
                .collect();
            let pools_ref: Vec<&[EntId]> = pools.iter().map(|p| p.as_slice()).collect();
            let mut args: SmallVec<[EntId; 3]> = SmallVec::new();
            cartesian(&pools_ref, &mut args, &mut |args| {
                let prop = Proposition { pred: pid as PredId, args: args.clone() };
                let (_, fresh) = self.props.insert_full(prop);
                if fresh {
                    self.prop_derived.push(entry.axiom.is_some());
                }
            });
        }
        Ok(())
    }

    /// Recompiles axiom conditions and the goal against the current pools.
    fn recompile(&mut self) -> Result<(), DomainError> {
        self.derived.clear();
        let axioms = self.domain.axioms.clone();
        for (idx, ax) in axioms.iter().enumerate() {
            // every registered arity of this axiom, ascending
            let mut arities: Vec<usize> = self
                .preds
                .iter()
                .filter(|p| p.axiom == Some(idx))
                .map(|p| p.arg_types.len())
                .collect();
            arities.sort_unstable();
            for arity in arities {
                let pid = self.pred_lookup[&(ax.name.clone(), arity)];
                let pools: Vec<&[EntId]> = self.preds[pid as usize]
                    .arg_types
                    .iter()
                    .map(|t| self.pool_or_all(t))
                    .collect();
                let pools: Vec<Vec<EntId>> = pools.into_iter().map(|p| p.to_vec()).collect();
                let pools_ref: Vec<&[EntId]> = pools.iter().map(|p| p.as_slice()).collect();
                let mut args: SmallVec<[EntId; 3]> = SmallVec::new();
                let mut result: Result<(), DomainError> = Ok(());
                cartesian(&pools_ref, &mut args, &mut |args| {
                    if result.is_err() {
                        return;
                    }
                    let prop =
                        Proposition { pred: pid, args: args.clone() };
                    let prop_id = self.props.get_index_of(&prop).unwrap() as PropId;
                    // remaining parameters are implicitly existential
                    let body = if arity < ax.params.len() {
                        Formula::Exists(ax.params[arity..].to_vec(), Box::new(ax.condition.clone()))
                    } else {
                        ax.condition.clone()
                    };
                    let mut env: Vec<(String, EntId)> = ax.params[..arity]
                        .iter()
                        .zip(args.iter())
                        .map(|(p, e)| (p.name.clone(), *e))
                        .collect();
                    match self.compile_formula(&body, &mut env) {
                        Ok(c) => self.derived.push((prop_id, c)),
                        Err(e) => result = Err(e),
                    }
                });
                result?;
            }
        }
        self.goal = match &self.domain.goal.clone() {
            Some(g) => self.compile_formula(g, &mut Vec::new())?,
            None => CompiledFormula::Const(false),
        };
        Ok(())
    }

    fn resolve_term(
        &self,
        t: &Term,
        env: &[(String, EntId)],
    ) -> Result<EntId, DomainError> {
        match t {
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, e)| *e)
                .ok_or_else(|| DomainError::Semantic {
                    msg: format!("unbound variable `?{v}`"),
                    line: 0,
                    col: 0,
                }),
            Term::Const(c) => self
                .entity_id(c)
                .ok_or_else(|| DomainError::UnknownEntity(c.clone())),
        }
    }

    fn ground_atom(
        &self,
        a: &Atom,
        env: &[(String, EntId)],
    ) -> Result<PropId, DomainError> {
        let args = a
            .args
            .iter()
            .map(|t| self.resolve_term(t, env))
            .collect::<Result<SmallVec<[EntId; 3]>, _>>()?;
        let pid = self
            .pred_lookup
            .get(&(a.pred.clone(), args.len()))
            .copied()
            .ok_or_else(|| DomainError::UnknownPredicate {
                name: a.pred.clone(),
                line: 0,
                col: 0,
            })?;
        let prop = Proposition { pred: pid, args };
        self.props
            .get_index_of(&prop)
            .map(|i| i as PropId)
            .ok_or_else(|| DomainError::PropositionNotInUniverse(self.format_prop_raw(&prop)))
    }

    fn compile_formula(
        &self,
        f: &Formula,
        env: &mut Vec<(String, EntId)>,
    ) -> Result<CompiledFormula, DomainError> {
        Ok(match f {
            Formula::Atom(a) => CompiledFormula::Prop(self.ground_atom(a, env)?),
            Formula::And(fs) => CompiledFormula::And(
                fs.iter()
                    .map(|x| self.compile_formula(x, env))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(fs) => CompiledFormula::Or(
                fs.iter()
                    .map(|x| self.compile_formula(x, env))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Not(x) => CompiledFormula::Not(Box::new(self.compile_formula(x, env)?)),
            Formula::Imply(a, b) => CompiledFormula::Or(vec![
                CompiledFormula::Not(Box::new(self.compile_formula(a, env)?)),
                self.compile_formula(b, env)?,
            ]),
            Formula::Exists(ps, body) => {
                CompiledFormula::Or(self.expand_quantifier(ps, body, env)?)
            }
            Formula::Forall(ps, body) => {
                CompiledFormula::And(self.expand_quantifier(ps, body, env)?)
            }
            Formula::Eq(a, b) => {
                let l = self.resolve_term(a, env)?;
                let r = self.resolve_term(b, env)?;
                CompiledFormula::Const(l == r)
            }
        })
    }

    fn expand_quantifier(
        &self,
        params: &[TypedParam],
        body: &Formula,
        env: &mut Vec<(String, EntId)>,
    ) -> Result<Vec<CompiledFormula>, DomainError> {
        let pools: Vec<Vec<EntId>> = params
            .iter()
            .map(|p| {
                self.type_id(&p.ty)
                    .map(|t| self.pools[t as usize].clone())
                    .unwrap_or_default()
            })
            .collect();
        let mut out = Vec::new();
        let n = env.len();
        let mut idx = vec![0usize; params.len()];
        if pools.iter().any(|p| p.is_empty()) {
            return Ok(out); // empty pool: exists is false, forall is true
        }
        loop {
            env.truncate(n);
            for (p, (param, pool)) in idx.iter().zip(params.iter().zip(&pools)) {
                env.push((param.name.clone(), pool[*p]));
            }
            out.push(self.compile_formula(body, env)?);
            // odometer
            let mut k = params.len();
            loop {
                if k == 0 {
                    env.truncate(n);
                    return Ok(out);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < pools[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Grounds one schema over the current pools, appending any operators not
    /// yet present. Binding order is lexicographic over the parameter pools,
    /// rightmost parameter fastest.
    pub fn ground_schema(&mut self, schema_idx: usize) -> Result<Vec<OpId>, DomainError> {
        let schema = self.domain.schemata[schema_idx].clone();
        let mut pools: Vec<Vec<EntId>> = Vec::with_capacity(schema.params.len());
        for p in &schema.params {
            let tid = self
                .type_id(&p.ty)
                .ok_or_else(|| DomainError::MissingPool(p.ty.clone()))?;
            let pool = self.pools[tid as usize].clone();
            if pool.is_empty() {
                return Err(DomainError::MissingPool(p.ty.clone()));
            }
            pools.push(pool);
        }

        let mut out = Vec::new();
        let pools_ref: Vec<&[EntId]> = pools.iter().map(|p| p.as_slice()).collect();
        let mut binding: SmallVec<[EntId; 4]> = SmallVec::new();
        let mut result: Result<(), DomainError> = Ok(());
        let mut bindings_list: Vec<SmallVec<[EntId; 4]>> = Vec::new();
        cartesian(&pools_ref, &mut binding, &mut |b| bindings_list.push(b.clone()));
        for bindings in bindings_list {
            if result.is_err() {
                break;
            }
            if let Some(&op) = self.op_lookup.get(&(schema_idx, bindings.clone())) {
                out.push(op);
                continue;
            }
            match self.build_operator(schema_idx, &schema, bindings) {
                Ok(op) => out.push(op),
                Err(e) => result = Err(e),
            }
        }
        result?;
        Ok(out)
    }

    fn build_operator(
        &mut self,
        schema_idx: usize,
        schema: &OperatorSchema,
        bindings: SmallVec<[EntId; 4]>,
    ) -> Result<OpId, DomainError> {
        let env: Vec<(String, EntId)> = schema
            .params
            .iter()
            .zip(bindings.iter())
            .map(|(p, e)| (p.name.clone(), *e))
            .collect();

        let mut pre = Vec::with_capacity(schema.pre.len());
        for l in &schema.pre {
            pre.push((self.ground_atom(&l.atom, &env)?, l.positive));
        }

        let mut ueff = Vec::with_capacity(schema.ueff.len());
        for a in &schema.ueff {
            let p = self.ground_atom(a, &env)?;
            self.reject_derived(p, &schema.name, ":ueffects")?;
            if !ueff.contains(&p) {
                ueff.push(p);
            }
        }
        if ueff.len() > 8 {
            return Err(DomainError::TooManyUncertainEffects(schema.name.clone(), ueff.len()));
        }

        let mut eff: Vec<(PropId, bool)> = Vec::new();
        let push_eff = |this: &Problem,
                            eff: &mut Vec<(PropId, bool)>,
                            lit: &Literal,
                            env: &[(String, EntId)]|
         -> Result<(), DomainError> {
            let p = this.ground_atom(&lit.atom, env)?;
            this.reject_derived(p, &schema.name, ":effects")?;
            if !ueff.contains(&p) {
                eff.push((p, lit.positive));
            }
            Ok(())
        };
        for item in &schema.eff {
            match item {
                EffectItem::Lit(l) => push_eff(self, &mut eff, l, &env)?,
                EffectItem::Forall { params, guard, lit } => {
                    let pools: Vec<Vec<EntId>> = params
                        .iter()
                        .map(|p| {
                            self.type_id(&p.ty)
                                .map(|t| self.pools[t as usize].clone())
                                .unwrap_or_default()
                        })
                        .collect();
                    let pools_ref: Vec<&[EntId]> =
                        pools.iter().map(|p| p.as_slice()).collect();
                    let mut args: SmallVec<[EntId; 3]> = SmallVec::new();
                    let mut inner_res: Result<(), DomainError> = Ok(());
                    let mut expansions: Vec<Vec<(String, EntId)>> = Vec::new();
                    cartesian(&pools_ref, &mut args, &mut |args| {
                        let mut e2 = env.clone();
                        e2.extend(
                            params
                                .iter()
                                .zip(args.iter())
                                .map(|(p, e)| (p.name.clone(), *e)),
                        );
                        expansions.push(e2);
                    });
                    for e2 in expansions {
                        if inner_res.is_err() {
                            break;
                        }
                        if let Some(g) = guard {
                            let l = self.resolve_term(&g.left, &e2)?;
                            let r = self.resolve_term(&g.right, &e2)?;
                            if (l == r) == g.negate {
                                continue;
                            }
                        }
                        inner_res = push_eff(self, &mut eff, lit, &e2);
                    }
                    inner_res?;
                }
            }
        }

        let mut ucond = Vec::with_capacity(schema.ucond.len());
        for a in &schema.ucond {
            let p = self.ground_atom(a, &env)?;
            if !ucond.contains(&p) {
                ucond.push(p);
            }
        }

        let id = self.operators.len() as OpId;
        let op = GroundOperator {
            schema_idx,
            name: schema.name.clone(),
            bindings: bindings.clone(),
            pre,
            eff,
            ucond,
            ueff,
        };
        match op.pre.iter().find(|(_, sign)| *sign) {
            Some(&(p, _)) => self.ops_by_pre.entry(p).or_default().push(id),
            None => self.ops_unindexed.push(id),
        }
        self.op_lookup.insert((schema_idx, bindings), id);
        self.operators.push(op);
        Ok(id)
    }

    fn reject_derived(&self, p: PropId, schema: &str, clause: &str) -> Result<(), DomainError> {
        if self.prop_derived[p as usize] {
            return Err(DomainError::Semantic {
                msg: format!(
                    "derived predicate `{}` cannot appear in {clause} of `{schema}`",
                    self.preds[self.props[p as usize].pred as usize].name
                ),
                line: 0,
                col: 0,
            });
        }
        Ok(())
    }

    /// Adds a fresh entity (e.g. a sampled continuous parameter), growing the
    /// universe and recompiling quantified formulas. Ground operators over the
    /// new entity appear when the affected schemata are re-grounded.
    pub fn add_entity(&mut self, ty: &str, name: &str) -> Result<EntId, DomainError> {
        let tid = self.intern_type(ty);
        let id = self.push_entity(tid, name)?;
        self.rebuild_universe()?;
        self.recompile()?;
        Ok(id)
    }

    // ----- queries ---------------------------------------------------------

    pub fn universe_len(&self) -> usize {
        self.props.len()
    }

    pub fn prop(&self, id: PropId) -> &Proposition {
        &self.props[id as usize]
    }

    pub fn is_derived(&self, id: PropId) -> bool {
        self.prop_derived[id as usize]
    }

    /// Base (environment-evaluated) proposition ids.
    pub fn base_props(&self) -> impl Iterator<Item = PropId> + '_ {
        (0..self.props.len() as PropId).filter(|&p| !self.prop_derived[p as usize])
    }

    pub fn prop_id(&self, pred: &str, args: &[&str]) -> Option<PropId> {
        let pid = *self.pred_lookup.get(&(pred.to_string(), args.len()))?;
        let args = args
            .iter()
            .map(|a| self.entity_id(a))
            .collect::<Option<SmallVec<[EntId; 3]>>>()?;
        self.props
            .get_index_of(&Proposition { pred: pid, args })
            .map(|i| i as PropId)
    }

    pub fn pred_name(&self, pred: PredId) -> &str {
        &self.preds[pred as usize].name
    }

    fn format_prop_raw(&self, prop: &Proposition) -> String {
        let mut s = String::new();
        s.push_str(&self.preds[prop.pred as usize].name);
        if !prop.args.is_empty() {
            s.push('(');
            for (i, a) in prop.args.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(self.entity_name(*a));
            }
            s.push(')');
        }
        s
    }

    pub fn format_prop(&self, id: PropId) -> String {
        self.format_prop_raw(&self.props[id as usize])
    }

    pub fn format_op(&self, op: &GroundOperator) -> String {
        let mut s = String::new();
        s.push_str(&op.name);
        s.push('(');
        for (i, b) in op.bindings.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(self.entity_name(*b));
        }
        s.push(')');
        s
    }

    pub fn format_belief(&self, b: &AbstractBelief) -> String {
        let mut s = String::from("{");
        for (i, p) in b.true_props().iter().enumerate() {
            if i > 0 {
                let _ = write!(s, ", ");
            }
            let _ = write!(s, "{}", self.format_prop(*p));
        }
        s.push('}');
        s
    }

    pub fn op(&self, id: OpId) -> &GroundOperator {
        &self.operators[id as usize]
    }

    /// Looks up an operator by schema name and bound entity names.
    pub fn op_id_by_name(&self, name: &str, bindings: &[&str]) -> Option<OpId> {
        let schema_idx = self.domain.schemata.iter().position(|s| s.name == name)?;
        let bindings = bindings
            .iter()
            .map(|b| self.entity_id(b))
            .collect::<Option<SmallVec<[EntId; 4]>>>()?;
        self.op_lookup.get(&(schema_idx, bindings)).copied()
    }

    // ----- semantics -------------------------------------------------------

    /// True iff all of `op`'s precondition literals hold in `b`.
    pub fn applicable(&self, op: &GroundOperator, b: &AbstractBelief) -> bool {
        op.pre.iter().all(|&(p, sign)| b.get(p) == sign)
    }

    /// Ids of all ground operators applicable in `b`, ascending.
    pub fn applicable_ops(&self, b: &AbstractBelief) -> Vec<OpId> {
        let mut out: Vec<OpId> = Vec::new();
        for &p in b.true_props() {
            if let Some(ops) = self.ops_by_pre.get(&p) {
                for &op in ops {
                    if self.applicable(&self.operators[op as usize], b) {
                        out.push(op);
                    }
                }
            }
        }
        for &op in &self.ops_unindexed {
            if self.applicable(&self.operators[op as usize], b) {
                out.push(op);
            }
        }
        out.sort_unstable();
        out
    }

    /// Applies `op` to `b` under the given uncertain-effect assignment:
    /// guaranteed effects first, then each uncertain effect set to its
    /// assigned value, then derived propositions are re-evaluated.
    pub fn apply_outcome(
        &self,
        b: &AbstractBelief,
        op: &GroundOperator,
        psi_eff: &[bool],
    ) -> Result<AbstractBelief, DomainError> {
        if psi_eff.len() != op.ueff.len() {
            return Err(DomainError::PartialAssignment {
                expected: op.ueff.len(),
                got: psi_eff.len(),
            });
        }
        let mut bits: OutcomeBits = 0;
        for (i, &v) in psi_eff.iter().enumerate() {
            if v {
                bits |= 1 << i;
            }
        }
        Ok(self.apply_outcome_bits(b, op, bits))
    }

    /// Bit-packed variant of [`Problem::apply_outcome`].
    pub fn apply_outcome_bits(
        &self,
        b: &AbstractBelief,
        op: &GroundOperator,
        psi_eff: OutcomeBits,
    ) -> AbstractBelief {
        let mut next = b.clone();
        for &(p, sign) in &op.eff {
            next.set(p, sign);
        }
        for (i, &p) in op.ueff.iter().enumerate() {
            next.set(p, psi_eff & (1 << i) != 0);
        }
        self.recompute_derived(&mut next);
        next
    }

    /// Re-evaluates every derived proposition in declaration order.
    pub fn recompute_derived(&self, b: &mut AbstractBelief) {
        for (prop, cond) in &self.derived {
            let v = cond.eval(b);
            b.set(*prop, v);
        }
    }

    /// Builds an abstract belief from base-proposition values, then fills in
    /// the derived propositions.
    pub fn belief_from_base(&self, mut base: impl FnMut(PropId) -> bool) -> AbstractBelief {
        let mut b = AbstractBelief::empty();
        for p in 0..self.props.len() as PropId {
            if !self.prop_derived[p as usize] && base(p) {
                b.set(p, true);
            }
        }
        self.recompute_derived(&mut b);
        b
    }

    pub fn eval_goal(&self, b: &AbstractBelief) -> bool {
        self.goal.eval(b)
    }

    pub fn goal_formula(&self) -> &CompiledFormula {
        &self.goal
    }
}

/// Calls `f` with every tuple of the cartesian product, rightmost pool
/// fastest.
fn cartesian<A: smallvec::Array<Item = EntId>>(
    pools: &[&[EntId]],
    scratch: &mut SmallVec<A>,
    f: &mut impl FnMut(&SmallVec<A>),
) {
    fn rec<A: smallvec::Array<Item = EntId>>(
        pools: &[&[EntId]],
        k: usize,
        scratch: &mut SmallVec<A>,
        f: &mut impl FnMut(&SmallVec<A>),
    ) {
        if k == pools.len() {
            f(scratch);
            return;
        }
        for &e in pools[k] {
            scratch.push(e);
            rec(pools, k + 1, scratch, f);
            scratch.pop();
        }
    }
    rec(pools, 0, scratch, f);
}

//! Domain parser: s-expressions to [`Domain`], with clause normalization.
//!
//! Normalizations applied here:
//! - `(verify P)` anywhere in `:effects`/`:ueffects` marks `P` uncertain,
//!   same as `(maybe P)`.
//! - A dynamic `(when c e)` in `:effects` expands the schema into variants,
//!   one with `c` added to the precondition and `e` to the effects, one with
//!   `(not c)` added and effects unchanged.
//! - `(forall ..)` effects, and `(when ..)` effects whose condition is an
//!   equality over parameters, are kept as templates and resolved during
//!   grounding.
//! - Non-literal precondition conjuncts compile into synthetic axioms so the
//!   operator precondition is always a literal set.
//! - A proposition listed both as a guaranteed and an uncertain effect is
//!   treated as uncertain (the outcome assignment overrides the guarantee,
//!   matching the order in which effects are applied).

use super::ast::*;
use super::sexpr::{read_all, Sexpr};
use super::DomainError;
use std::collections::BTreeMap;

pub fn parse_domain(text: &str) -> Result<Domain, DomainError> {
    let blocks = read_all(text)?;
    let mut dom = Domain {
        types: Vec::new(),
        types_declared: false,
        predicates: Vec::new(),
        predicates_declared: false,
        schemata: Vec::new(),
        axioms: Vec::new(),
        goal: None,
    };
    let mut synthetic: Vec<Axiom> = Vec::new();

    for block in &blocks {
        let items = block
            .items()
            .ok_or_else(|| err_at(block, "expected a block list"))?;
        let head = items
            .first()
            .and_then(|h| h.atom())
            .ok_or_else(|| err_at(block, "expected a block keyword"))?;
        match head.to_ascii_lowercase().as_str() {
            ":types" => {
                dom.types_declared = true;
                for t in &items[1..] {
                    let name = t
                        .atom()
                        .ok_or_else(|| err_at(t, "expected a type name"))?;
                    if !dom.types.iter().any(|x| x == name) {
                        dom.types.push(name.to_string());
                    }
                }
            }
            ":predicates" => {
                dom.predicates_declared = true;
                for p in &items[1..] {
                    dom.predicates.push(parse_predicate_decl(p)?);
                }
            }
            ":action" => parse_action(items, block, &mut dom, &mut synthetic)?,
            ":axiom" => parse_axiom(items, block, &mut dom)?,
            ":reward" => {
                let f = parse_reward_body(&items[1..], block)?;
                set_goal(&mut dom, f, block)?;
            }
            other => {
                return Err(err_at(block, format!("unknown block `{other}`")));
            }
        }
    }

    // synthetic precondition axioms evaluate after all declared ones
    dom.axioms.extend(synthetic);
    check_and_infer(&mut dom)?;
    Ok(dom)
}

fn err_at(e: &Sexpr, msg: impl Into<String>) -> DomainError {
    let (line, col) = e.pos();
    DomainError::syntax(msg, line, col)
}

fn set_goal(dom: &mut Domain, f: Formula, at: &Sexpr) -> Result<(), DomainError> {
    if dom.goal.is_some() {
        let (line, col) = at.pos();
        return Err(DomainError::semantic("duplicate reward block", line, col));
    }
    dom.goal = Some(f);
    Ok(())
}

fn parse_predicate_decl(e: &Sexpr) -> Result<PredicateSchema, DomainError> {
    let items = e
        .items()
        .ok_or_else(|| err_at(e, "expected a predicate declaration"))?;
    let name = items
        .first()
        .and_then(|h| h.atom())
        .ok_or_else(|| err_at(e, "expected a predicate name"))?;
    let params = parse_typed_params(&items[1..], e, true)?;
    Ok(PredicateSchema {
        name: name.to_string(),
        arg_types: params.into_iter().map(|p| Some(p.ty)).collect(),
    })
}

/// Parses a flat `?a - t ?b ?c - u` token run. With `allow_untyped`, a
/// trailing variable without `- type` defaults to `object`.
fn parse_typed_params(
    items: &[Sexpr],
    at: &Sexpr,
    allow_untyped: bool,
) -> Result<Vec<TypedParam>, DomainError> {
    let mut out: Vec<TypedParam> = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let tok = items[i]
            .atom()
            .ok_or_else(|| err_at(&items[i], "expected a parameter token"))?;
        if tok == "-" {
            i += 1;
            let ty = items
                .get(i)
                .and_then(|t| t.atom())
                .ok_or_else(|| err_at(at, "expected a type after `-`"))?;
            if pending.is_empty() {
                return Err(err_at(&items[i], "type with no preceding parameters"));
            }
            for name in pending.drain(..) {
                out.push(TypedParam { name, ty: ty.to_string() });
            }
        } else if let Some(name) = tok.strip_prefix('?') {
            pending.push(name.to_string());
        } else {
            return Err(err_at(&items[i], format!("expected `?name`, got `{tok}`")));
        }
        i += 1;
    }
    if !pending.is_empty() {
        if !allow_untyped {
            return Err(err_at(at, "parameter missing a type"));
        }
        for name in pending {
            out.push(TypedParam { name, ty: "object".to_string() });
        }
    }
    Ok(out)
}

fn keyword(e: &Sexpr) -> Option<String> {
    e.atom().map(|a| a.to_ascii_lowercase())
}

fn parse_term(e: &Sexpr) -> Result<Term, DomainError> {
    let tok = e.atom().ok_or_else(|| err_at(e, "expected a term"))?;
    if let Some(v) = tok.strip_prefix('?') {
        Ok(Term::Var(v.to_string()))
    } else if let Some(c) = tok.strip_prefix('@') {
        Ok(Term::Const(c.to_string()))
    } else {
        // bare names are treated as constants
        Ok(Term::Const(tok.to_string()))
    }
}

fn parse_atom(items: &[Sexpr], at: &Sexpr) -> Result<Atom, DomainError> {
    let pred = items
        .first()
        .and_then(|h| h.atom())
        .ok_or_else(|| err_at(at, "expected a predicate application"))?;
    let args = items[1..]
        .iter()
        .map(parse_term)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Atom { pred: pred.to_string(), args })
}

/// Recursive formula parser for preconditions, conditions and goals.
fn parse_formula(e: &Sexpr) -> Result<Formula, DomainError> {
    let items = match e {
        Sexpr::Atom { text, .. } => {
            if text.eq_ignore_ascii_case("true") {
                return Ok(Formula::TRUE);
            }
            return Err(err_at(e, format!("expected a formula, got `{text}`")));
        }
        Sexpr::List { items, .. } => items,
    };
    let Some(head) = items.first().and_then(|h| h.atom()) else {
        return Err(err_at(e, "expected a formula"));
    };
    match head.to_ascii_lowercase().trim_start_matches(':') {
        "true" => Ok(Formula::TRUE),
        "and" => Ok(Formula::And(
            items[1..].iter().map(parse_formula).collect::<Result<_, _>>()?,
        )),
        "or" => Ok(Formula::Or(
            items[1..].iter().map(parse_formula).collect::<Result<_, _>>()?,
        )),
        "not" => {
            if items.len() != 2 {
                return Err(err_at(e, "`not` takes exactly one argument"));
            }
            Ok(Formula::Not(Box::new(parse_formula(&items[1])?)))
        }
        "imply" | "implies" => {
            if items.len() != 3 {
                return Err(err_at(e, "`imply` takes two arguments"));
            }
            Ok(Formula::Imply(
                Box::new(parse_formula(&items[1])?),
                Box::new(parse_formula(&items[2])?),
            ))
        }
        "exists" | "forall" => {
            let quant = head.to_ascii_lowercase();
            let (params, body) = parse_quantifier(&items[1..], e)?;
            let body = Box::new(body);
            if quant.trim_start_matches(':') == "exists" {
                Ok(Formula::Exists(params, body))
            } else {
                Ok(Formula::Forall(params, body))
            }
        }
        "=" => {
            if items.len() != 3 {
                return Err(err_at(e, "`=` takes two arguments"));
            }
            Ok(Formula::Eq(parse_term(&items[1])?, parse_term(&items[2])?))
        }
        _ => Ok(Formula::Atom(parse_atom(items, e)?)),
    }
}

/// Parses quantifier arguments, accepting both `(exists (?x - t) body)` and
/// the unparenthesized `(exists ?x - t body)` form.
fn parse_quantifier(
    items: &[Sexpr],
    at: &Sexpr,
) -> Result<(Vec<TypedParam>, Formula), DomainError> {
    if items.is_empty() {
        return Err(err_at(at, "quantifier missing parameters and body"));
    }
    if items.len() == 2 {
        if let Sexpr::List { .. } = items[0] {
            let params = parse_typed_params(items[0].items().unwrap(), at, false)?;
            let body = parse_formula(&items[1])?;
            return Ok((params, body));
        }
    }
    // unparenthesized: everything before the final expression is parameters
    let (body_e, param_toks) = items.split_last().unwrap();
    let params = parse_typed_params(param_toks, at, false)?;
    let body = parse_formula(body_e)?;
    Ok((params, body))
}

fn parse_literal(e: &Sexpr) -> Result<Literal, DomainError> {
    let items = e.items().ok_or_else(|| err_at(e, "expected a literal"))?;
    let head = items
        .first()
        .and_then(|h| h.atom())
        .ok_or_else(|| err_at(e, "expected a literal"))?;
    if head.eq_ignore_ascii_case("not") {
        if items.len() != 2 {
            return Err(err_at(e, "`not` takes exactly one argument"));
        }
        let inner = items[1]
            .items()
            .ok_or_else(|| err_at(&items[1], "expected an atom under `not`"))?;
        Ok(Literal { positive: false, atom: parse_atom(inner, &items[1])? })
    } else {
        Ok(Literal { positive: true, atom: parse_atom(items, e)? })
    }
}

/// Effects as parsed from `:effects`, before variant expansion.
#[derive(Default)]
struct RawEffects {
    items: Vec<EffectItem>,
    ueff_extra: Vec<Atom>,
    whens: Vec<(Formula, Vec<EffectItem>, Vec<Atom>)>,
}

fn is_true_expr(e: &Sexpr) -> bool {
    match e {
        Sexpr::Atom { text, .. } => text.eq_ignore_ascii_case("true"),
        Sexpr::List { items, .. } => {
            items.len() == 1
                && items[0]
                    .atom()
                    .is_some_and(|a| a.eq_ignore_ascii_case("true"))
        }
    }
}

fn parse_effects(e: &Sexpr, out: &mut RawEffects, top: bool) -> Result<(), DomainError> {
    if is_true_expr(e) {
        return Ok(());
    }
    let items = e.items().ok_or_else(|| err_at(e, "expected an effect"))?;
    let head = items
        .first()
        .and_then(|h| h.atom())
        .ok_or_else(|| err_at(e, "expected an effect"))?;
    match head.to_ascii_lowercase().as_str() {
        "and" => {
            for x in &items[1..] {
                parse_effects(x, out, top)?;
            }
            Ok(())
        }
        "maybe" | "verify" => {
            for x in &items[1..] {
                let a = x
                    .items()
                    .ok_or_else(|| err_at(x, "expected an atom"))
                    .and_then(|it| parse_atom(it, x))?;
                out.ueff_extra.push(a);
            }
            Ok(())
        }
        "forall" => {
            let (params, body_e) = split_quantifier_effect(&items[1..], e)?;
            let (guard, lit) = parse_guarded_literal(body_e)?;
            out.items.push(EffectItem::Forall { params, guard, lit });
            Ok(())
        }
        "when" => {
            if items.len() != 3 {
                return Err(err_at(e, "`when` takes a condition and an effect"));
            }
            if let Some(guard) = as_static_guard(&items[1])? {
                let lit = parse_literal(&items[2])?;
                out.items.push(EffectItem::Forall { params: vec![], guard: Some(guard), lit });
                return Ok(());
            }
            if !top {
                return Err(err_at(e, "nested non-static `when` is not supported"));
            }
            let cond = parse_formula(&items[1])?;
            let mut inner = RawEffects::default();
            parse_effects(&items[2], &mut inner, false)?;
            if !inner.whens.is_empty() {
                return Err(err_at(e, "nested non-static `when` is not supported"));
            }
            out.whens.push((cond, inner.items, inner.ueff_extra));
            Ok(())
        }
        _ => {
            out.items.push(EffectItem::Lit(parse_literal(e)?));
            Ok(())
        }
    }
}

/// Like [`parse_quantifier`] but for effect bodies.
fn split_quantifier_effect<'a>(
    items: &'a [Sexpr],
    at: &Sexpr,
) -> Result<(Vec<TypedParam>, &'a Sexpr), DomainError> {
    if items.is_empty() {
        return Err(err_at(at, "forall missing parameters and body"));
    }
    if items.len() == 2 {
        if let Sexpr::List { .. } = items[0] {
            let first = items[0].items().unwrap();
            let looks_typed = first
                .first()
                .and_then(|x| x.atom())
                .is_some_and(|a| a.starts_with('?'));
            if looks_typed {
                let params = parse_typed_params(first, at, false)?;
                return Ok((params, &items[1]));
            }
        }
    }
    let (body, param_toks) = items.split_last().unwrap();
    let params = parse_typed_params(param_toks, at, false)?;
    Ok((params, body))
}

/// Recognizes `(= a b)` and `(not (= a b))` conditions.
fn as_static_guard(e: &Sexpr) -> Result<Option<StaticGuard>, DomainError> {
    let Some(items) = e.items() else { return Ok(None) };
    let Some(head) = items.first().and_then(|h| h.atom()) else {
        return Ok(None);
    };
    if head == "=" && items.len() == 3 {
        return Ok(Some(StaticGuard {
            negate: false,
            left: parse_term(&items[1])?,
            right: parse_term(&items[2])?,
        }));
    }
    if head.eq_ignore_ascii_case("not") && items.len() == 2 {
        if let Some(inner) = as_static_guard(&items[1])? {
            if inner.negate {
                return Ok(None);
            }
            return Ok(Some(StaticGuard { negate: true, ..inner }));
        }
    }
    Ok(None)
}

fn parse_guarded_literal(e: &Sexpr) -> Result<(Option<StaticGuard>, Literal), DomainError> {
    if let Some(items) = e.items() {
        if items.first().and_then(|h| h.atom()).is_some_and(|h| h.eq_ignore_ascii_case("when")) {
            if items.len() != 3 {
                return Err(err_at(e, "`when` takes a condition and an effect"));
            }
            let guard = as_static_guard(&items[1])?.ok_or_else(|| {
                err_at(&items[1], "only equality conditions are supported under `forall`")
            })?;
            return Ok((Some(guard), parse_literal(&items[2])?));
        }
    }
    Ok((None, parse_literal(e)?))
}

/// Collects the unsigned atoms of a `:uconds` or `:ueffects` clause.
fn parse_atom_set(e: &Sexpr, clause: &str) -> Result<Vec<Atom>, DomainError> {
    if is_true_expr(e) {
        return Ok(vec![]);
    }
    let items = e.items().ok_or_else(|| err_at(e, "expected a clause"))?;
    let head = items
        .first()
        .and_then(|h| h.atom())
        .ok_or_else(|| err_at(e, "expected a clause"))?;
    match head.to_ascii_lowercase().as_str() {
        "and" | "maybe" | "verify" => {
            let mut out = Vec::new();
            for x in &items[1..] {
                out.extend(parse_atom_set(x, clause)?);
            }
            Ok(out)
        }
        "not" => Err(err_at(e, format!("negated literal not allowed in {clause}"))),
        _ => Ok(vec![parse_atom(items, e)?]),
    }
}

fn parse_action(
    items: &[Sexpr],
    block: &Sexpr,
    dom: &mut Domain,
    synthetic: &mut Vec<Axiom>,
) -> Result<(), DomainError> {
    let name = items
        .get(1)
        .and_then(|n| n.atom())
        .ok_or_else(|| err_at(block, "expected an action name"))?
        .to_string();
    if dom.schema(&name).is_some() {
        let (line, col) = block.pos();
        return Err(DomainError::semantic(format!("duplicate action `{name}`"), line, col));
    }

    let mut params: Vec<TypedParam> = Vec::new();
    let mut pre = Formula::TRUE;
    let mut raw = RawEffects::default();
    let mut ucond: Vec<Atom> = Vec::new();
    let mut ueff: Vec<Atom> = Vec::new();

    let mut i = 2;
    while i < items.len() {
        let key = keyword(&items[i])
            .ok_or_else(|| err_at(&items[i], "expected a `:clause` keyword"))?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| err_at(&items[i], format!("`{key}` missing a value")))?;
        match key.as_str() {
            ":parameters" => {
                let toks = val
                    .items()
                    .ok_or_else(|| err_at(val, "expected a parameter list"))?;
                params = parse_typed_params(toks, val, false)?;
            }
            ":precondition" | ":preconditions" => pre = parse_formula(val)?,
            ":effects" | ":effect" => parse_effects(val, &mut raw, true)?,
            ":uconds" | ":ucond" => ucond = parse_atom_set(val, ":uconds")?,
            ":ueffects" | ":ueffect" => ueff = parse_atom_set(val, ":ueffects")?,
            other => return Err(err_at(&items[i], format!("unknown clause `{other}`"))),
        }
        i += 2;
    }

    ueff.extend(raw.ueff_extra.drain(..));

    // Expand dynamic `when` clauses into schema variants.
    let mut variants: Vec<(String, Formula, Vec<EffectItem>, Vec<Atom>)> =
        vec![(name.clone(), pre, raw.items, ueff)];
    for (wi, (cond, add_items, add_ueff)) in raw.whens.into_iter().enumerate() {
        let mut next = Vec::with_capacity(variants.len() * 2);
        for (vname, vpre, veff, vueff) in variants {
            let mut on_eff = veff.clone();
            on_eff.extend(add_items.iter().cloned());
            let mut on_ueff = vueff.clone();
            on_ueff.extend(add_ueff.iter().cloned());
            next.push((
                format!("{vname}-w{wi}t"),
                Formula::And(vec![vpre.clone(), cond.clone()]),
                on_eff,
                on_ueff,
            ));
            next.push((
                format!("{vname}-w{wi}f"),
                Formula::And(vec![vpre, Formula::Not(Box::new(cond.clone()))]),
                veff,
                vueff,
            ));
        }
        variants = next;
    }

    for (vname, vpre, veff, vueff) in variants {
        let vueff = dedup_atoms(vueff);
        // uncertain effects win over colliding guaranteed effects
        let veff: Vec<EffectItem> = veff
            .into_iter()
            .filter(|item| match item {
                EffectItem::Lit(l) => !vueff.contains(&l.atom),
                EffectItem::Forall { .. } => true,
            })
            .collect();
        if vueff.len() > 8 {
            return Err(DomainError::TooManyUncertainEffects(vname, vueff.len()));
        }
        let (pre_lits, vaxioms) = compile_precondition(&vname, &params, &vpre)?;
        synthetic.extend(vaxioms);
        dom.schemata.push(OperatorSchema {
            name: vname,
            params: params.clone(),
            pre_formula: vpre,
            pre: pre_lits,
            eff: veff,
            ucond: dedup_atoms(ucond.clone()),
            ueff: vueff,
        });
    }
    Ok(())
}

fn dedup_atoms(atoms: Vec<Atom>) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        if !out.contains(&a) {
            out.push(a);
        }
    }
    out
}

/// Splits a precondition into literals, creating a synthetic axiom for every
/// conjunct that is not a plain literal.
fn compile_precondition(
    schema: &str,
    params: &[TypedParam],
    pre: &Formula,
) -> Result<(Vec<Literal>, Vec<Axiom>), DomainError> {
    let mut lits = Vec::new();
    let mut axioms = Vec::new();
    for (k, conj) in pre.conjuncts().into_iter().enumerate() {
        match conj {
            Formula::Atom(a) => lits.push(Literal { positive: true, atom: a.clone() }),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) => lits.push(Literal { positive: false, atom: a.clone() }),
                complex => {
                    let (lit, ax) = synthesize(schema, params, k, complex, false);
                    lits.push(lit);
                    axioms.push(ax);
                }
            },
            complex => {
                let (lit, ax) = synthesize(schema, params, k, complex, true);
                lits.push(lit);
                axioms.push(ax);
            }
        }
    }
    Ok((lits, axioms))
}

fn synthesize(
    schema: &str,
    params: &[TypedParam],
    k: usize,
    condition: &Formula,
    positive: bool,
) -> (Literal, Axiom) {
    let free = free_params(condition, params);
    let name = format!("{schema}-pre{k}");
    let atom = Atom {
        pred: name.clone(),
        args: free.iter().map(|p| Term::Var(p.name.clone())).collect(),
    };
    let axiom = Axiom {
        name,
        params: free,
        condition: condition.clone(),
        synthetic: true,
    };
    (Literal { positive, atom }, axiom)
}

/// Schema parameters referenced free in `f`, in declaration order.
fn free_params(f: &Formula, params: &[TypedParam]) -> Vec<TypedParam> {
    fn walk(f: &Formula, bound: &mut Vec<String>, used: &mut Vec<String>) {
        match f {
            Formula::Atom(a) => {
                for t in &a.args {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) && !used.contains(v) {
                            used.push(v.clone());
                        }
                    }
                }
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|x| walk(x, bound, used)),
            Formula::Not(x) => walk(x, bound, used),
            Formula::Imply(a, b) => {
                walk(a, bound, used);
                walk(b, bound, used);
            }
            Formula::Exists(ps, x) | Formula::Forall(ps, x) => {
                let n = bound.len();
                bound.extend(ps.iter().map(|p| p.name.clone()));
                walk(x, bound, used);
                bound.truncate(n);
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) && !used.contains(v) {
                            used.push(v.clone());
                        }
                    }
                }
            }
        }
    }
    let mut bound = Vec::new();
    let mut used = Vec::new();
    walk(f, &mut bound, &mut used);
    params.iter().filter(|p| used.contains(&p.name)).cloned().collect()
}

fn parse_axiom(items: &[Sexpr], block: &Sexpr, dom: &mut Domain) -> Result<(), DomainError> {
    let name = items
        .get(1)
        .and_then(|n| n.atom())
        .ok_or_else(|| err_at(block, "expected an axiom name"))?
        .to_string();
    let mut params = Vec::new();
    let mut condition: Option<Formula> = None;
    let mut context: Option<Formula> = None;
    let mut i = 2;
    while i < items.len() {
        let key = keyword(&items[i])
            .ok_or_else(|| err_at(&items[i], "expected a `:clause` keyword"))?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| err_at(&items[i], format!("`{key}` missing a value")))?;
        match key.as_str() {
            ":parameters" => {
                let toks = val
                    .items()
                    .ok_or_else(|| err_at(val, "expected a parameter list"))?;
                params = parse_typed_params(toks, val, false)?;
            }
            ":condition" => condition = Some(parse_formula(val)?),
            ":context" => context = Some(parse_formula(val)?),
            ":implies" => {} // reward amount; the goal is binary
            other => return Err(err_at(&items[i], format!("unknown clause `{other}`"))),
        }
        i += 2;
    }
    if let Some(ctx) = context {
        // `(:axiom reward :context F :implies (increase ..))` declares the goal
        return set_goal(dom, ctx, block);
    }
    let condition =
        condition.ok_or_else(|| err_at(block, "axiom missing `:condition`"))?;
    if dom.axiom(&name).is_some() {
        let (line, col) = block.pos();
        return Err(DomainError::semantic(format!("duplicate axiom `{name}`"), line, col));
    }
    dom.axioms.push(Axiom { name, params, condition, synthetic: false });
    Ok(())
}

fn parse_reward_body(items: &[Sexpr], block: &Sexpr) -> Result<Formula, DomainError> {
    // accepted: (:reward F), (:reward :formula F), (:reward :condition F)
    match items {
        [single] => parse_formula(single),
        [key, val] if keyword(key).as_deref() == Some(":formula")
            || keyword(key).as_deref() == Some(":condition") =>
        {
            parse_formula(val)
        }
        _ => Err(err_at(block, "expected `(:reward formula)`")),
    }
}

// ---------------------------------------------------------------------------
// Signature checking / inference
// ---------------------------------------------------------------------------

struct SigCtx {
    declared: bool,
    sigs: BTreeMap<String, Vec<Option<String>>>,
    /// axiom name -> parameter types (partial application allowed)
    axioms: BTreeMap<String, Vec<String>>,
    /// inferred constant types
    consts: BTreeMap<String, Option<String>>,
}

impl SigCtx {
    fn visit_atom(
        &mut self,
        a: &Atom,
        env: &[(String, String)],
        pos: (u32, u32),
    ) -> Result<(), DomainError> {
        let (line, col) = pos;
        if let Some(ax_params) = self.axioms.get(&a.pred).cloned() {
            if a.args.len() > ax_params.len() {
                return Err(DomainError::ArityMismatch {
                    name: a.pred.clone(),
                    expected: ax_params.len(),
                    got: a.args.len(),
                    line,
                    col,
                });
            }
            for (arg, want) in a.args.iter().zip(&ax_params) {
                self.check_term(arg, &Some(want.clone()), &a.pred, env, pos)?;
            }
            return Ok(());
        }
        if self.declared {
            let Some(sig) = self.sigs.get(&a.pred).cloned() else {
                return Err(DomainError::UnknownPredicate {
                    name: a.pred.clone(),
                    line,
                    col,
                });
            };
            if sig.len() != a.args.len() {
                return Err(DomainError::ArityMismatch {
                    name: a.pred.clone(),
                    expected: sig.len(),
                    got: a.args.len(),
                    line,
                    col,
                });
            }
            for (arg, want) in a.args.iter().zip(&sig) {
                self.check_term(arg, want, &a.pred, env, pos)?;
            }
        } else {
            let sig = self
                .sigs
                .entry(a.pred.clone())
                .or_insert_with(|| vec![None; a.args.len()]);
            if sig.len() != a.args.len() {
                return Err(DomainError::ArityMismatch {
                    name: a.pred.clone(),
                    expected: sig.len(),
                    got: a.args.len(),
                    line,
                    col,
                });
            }
            let mut sig = sig.clone();
            for (i, arg) in a.args.iter().enumerate() {
                match arg {
                    Term::Var(v) => {
                        let ty = env.iter().rev().find(|(n, _)| n == v).map(|(_, t)| t);
                        let Some(ty) = ty else {
                            return Err(DomainError::semantic(
                                format!("unbound variable `?{v}`"),
                                line,
                                col,
                            ));
                        };
                        match &sig[i] {
                            None => sig[i] = Some(ty.clone()),
                            Some(t) if t == ty => {}
                            Some(t) => {
                                return Err(DomainError::TypeMismatch {
                                    msg: format!(
                                        "argument {i} of `{}` is used as both `{t}` and `{ty}`",
                                        a.pred
                                    ),
                                    line,
                                    col,
                                })
                            }
                        }
                    }
                    Term::Const(c) => {
                        let want = sig[i].clone();
                        self.record_const(c, want, pos)?;
                    }
                }
            }
            self.sigs.insert(a.pred.clone(), sig);
        }
        Ok(())
    }

    fn check_term(
        &mut self,
        t: &Term,
        want: &Option<String>,
        pred: &str,
        env: &[(String, String)],
        pos: (u32, u32),
    ) -> Result<(), DomainError> {
        let (line, col) = pos;
        match t {
            Term::Var(v) => {
                let ty = env.iter().rev().find(|(n, _)| n == v).map(|(_, t)| t);
                let Some(ty) = ty else {
                    return Err(DomainError::semantic(
                        format!("unbound variable `?{v}`"),
                        line,
                        col,
                    ));
                };
                if let Some(want) = want {
                    if want != ty {
                        return Err(DomainError::TypeMismatch {
                            msg: format!(
                                "`?{v}: {ty}` passed to `{pred}` where `{want}` is expected"
                            ),
                            line,
                            col,
                        });
                    }
                }
                Ok(())
            }
            Term::Const(c) => self.record_const(c, want.clone(), pos),
        }
    }

    fn record_const(
        &mut self,
        c: &str,
        want: Option<String>,
        pos: (u32, u32),
    ) -> Result<(), DomainError> {
        let (line, col) = pos;
        match self.consts.entry(c.to_string()) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(want);
                Ok(())
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                match (e.get().clone(), want) {
                    (None, w) => {
                        *e.get_mut() = w;
                        Ok(())
                    }
                    (_, None) => Ok(()),
                    (Some(a), Some(b)) if a == b => Ok(()),
                    (Some(a), Some(b)) => Err(DomainError::TypeMismatch {
                        msg: format!("constant `@{c}` is used as both `{a}` and `{b}`"),
                        line,
                        col,
                    }),
                }
            }
        }
    }

    fn visit_formula(
        &mut self,
        f: &Formula,
        env: &mut Vec<(String, String)>,
    ) -> Result<(), DomainError> {
        match f {
            Formula::Atom(a) => self.visit_atom(a, env, (0, 0)),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().try_for_each(|x| self.visit_formula(x, env))
            }
            Formula::Not(x) => self.visit_formula(x, env),
            Formula::Imply(a, b) => {
                self.visit_formula(a, env)?;
                self.visit_formula(b, env)
            }
            Formula::Exists(ps, x) | Formula::Forall(ps, x) => {
                let n = env.len();
                env.extend(ps.iter().map(|p| (p.name.clone(), p.ty.clone())));
                let r = self.visit_formula(x, env);
                env.truncate(n);
                r
            }
            Formula::Eq(_, _) => Ok(()),
        }
    }
}

fn check_and_infer(dom: &mut Domain) -> Result<(), DomainError> {
    let mut ctx = SigCtx {
        declared: dom.predicates_declared,
        sigs: dom
            .predicates
            .iter()
            .map(|p| (p.name.clone(), p.arg_types.clone()))
            .collect(),
        axioms: dom
            .axioms
            .iter()
            .map(|a| (a.name.clone(), a.params.iter().map(|p| p.ty.clone()).collect()))
            .collect(),
        consts: BTreeMap::new(),
    };

    for ax in &dom.axioms {
        let mut env: Vec<(String, String)> =
            ax.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
        ctx.visit_formula(&ax.condition, &mut env)?;
    }
    let schemata = dom.schemata.clone();
    for s in &schemata {
        let mut env: Vec<(String, String)> =
            s.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
        ctx.visit_formula(&s.pre_formula, &mut env)?;
        for item in &s.eff {
            match item {
                EffectItem::Lit(l) => ctx.visit_atom(&l.atom, &env, (0, 0))?,
                EffectItem::Forall { params, lit, .. } => {
                    let n = env.len();
                    env.extend(params.iter().map(|p| (p.name.clone(), p.ty.clone())));
                    ctx.visit_atom(&lit.atom, &env, (0, 0))?;
                    env.truncate(n);
                }
            }
        }
        for a in s.ucond.iter().chain(&s.ueff) {
            ctx.visit_atom(a, &env, (0, 0))?;
        }
    }
    if let Some(goal) = &dom.goal {
        let mut env = Vec::new();
        ctx.visit_formula(goal, &mut env)?;
    }

    if !dom.predicates_declared {
        dom.predicates = ctx
            .sigs
            .iter()
            .map(|(name, tys)| PredicateSchema { name: name.clone(), arg_types: tys.clone() })
            .collect();
    }
    if !dom.types_declared {
        let mut types: Vec<String> = Vec::new();
        let mut add = |t: &str| {
            if !types.iter().any(|x| x == t) {
                types.push(t.to_string());
            }
        };
        for s in &dom.schemata {
            for p in &s.params {
                add(&p.ty);
            }
        }
        for a in &dom.axioms {
            for p in &a.params {
                add(&p.ty);
            }
        }
        for p in &dom.predicates {
            for t in p.arg_types.iter().flatten() {
                add(t);
            }
        }
        dom.types = types;
    }
    Ok(())
}

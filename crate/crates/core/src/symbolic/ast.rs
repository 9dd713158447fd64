//! Parsed domain structures: predicates, operator schemata, axioms and goal.
//!
//! These are string-level values produced by the parser; grounding against an
//! entity pool happens in [`crate::symbolic::ground`].

use std::fmt;

/// A term inside a proposition template: either a schema parameter (`?x`) or
/// a pre-bound constant entity (`@glass`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "@{c}"),
        }
    }
}

/// An applied predicate template, e.g. `(BVPose ?o)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A signed atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

/// `?name - type` pair from a parameter list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

impl fmt::Display for TypedParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{} - {}", self.name, self.ty)
    }
}

/// Boolean formula over proposition templates.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Exists(Vec<TypedParam>, Box<Formula>),
    Forall(Vec<TypedParam>, Box<Formula>),
    /// `(= a b)`; static over bindings, resolved during grounding.
    Eq(Term, Term),
}

impl Formula {
    pub const TRUE: Formula = Formula::And(Vec::new());

    /// Flattens a top-level conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            other => vec![other],
        }
    }
}

fn fmt_params(f: &mut fmt::Formatter<'_>, params: &[TypedParam]) -> fmt::Result {
    write!(f, "(")?;
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{p}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::And(fs) => {
                write!(f, "(and")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            Formula::Not(x) => write!(f, "(not {x})"),
            Formula::Imply(a, b) => write!(f, "(imply {a} {b})"),
            Formula::Exists(ps, x) => {
                write!(f, "(exists ")?;
                fmt_params(f, ps)?;
                write!(f, " {x})")
            }
            Formula::Forall(ps, x) => {
                write!(f, "(forall ")?;
                fmt_params(f, ps)?;
                write!(f, " {x})")
            }
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
        }
    }
}

/// Static `(when (= ..)/(not (= ..)) ..)` guard inside a quantified effect.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticGuard {
    pub negate: bool,
    pub left: Term,
    pub right: Term,
}

/// One item in a schema's guaranteed-effect list.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectItem {
    Lit(Literal),
    /// `(forall (?x - t) lit)` or `(forall (?x - t) (when guard lit))`,
    /// expanded over the entity pool at grounding time.
    Forall {
        params: Vec<TypedParam>,
        guard: Option<StaticGuard>,
        lit: Literal,
    },
}

/// A predicate signature. `arg_types[i] = None` means the position is
/// unconstrained (only occurs when signatures are inferred from usage).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredicateSchema {
    pub name: String,
    pub arg_types: Vec<Option<String>>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.arg_types.len()
    }
}

/// An operator schema: preconditions, guaranteed effects, uncertain effects
/// and the propositions conditioning the uncertain-effect distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    /// Precondition as written; compiled into `pre` plus synthetic axioms.
    pub pre_formula: Formula,
    /// Literal preconditions, including references to synthetic axiom
    /// predicates standing in for non-literal conjuncts.
    pub pre: Vec<Literal>,
    pub eff: Vec<EffectItem>,
    pub ucond: Vec<Atom>,
    pub ueff: Vec<Atom>,
}

/// A derived predicate: re-evaluated on the abstract belief after every
/// operator application. When referenced with fewer arguments than declared,
/// the remaining parameters are implicitly existentially quantified.
#[derive(Debug, Clone, PartialEq)]
pub struct Axiom {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub condition: Formula,
    /// Synthesized from a non-literal precondition conjunct; regenerated on
    /// every parse and therefore not printed.
    pub synthetic: bool,
}

/// A parsed domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub types: Vec<String>,
    pub types_declared: bool,
    pub predicates: Vec<PredicateSchema>,
    /// True when the file carried a `(:predicates ..)` block; signatures are
    /// then enforced instead of inferred.
    pub predicates_declared: bool,
    pub schemata: Vec<OperatorSchema>,
    pub axioms: Vec<Axiom>,
    pub goal: Option<Formula>,
}

impl Domain {
    pub fn schema(&self, name: &str) -> Option<&OperatorSchema> {
        self.schemata.iter().find(|s| s.name == name)
    }

    pub fn axiom(&self, name: &str) -> Option<&Axiom> {
        self.axioms.iter().find(|a| a.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

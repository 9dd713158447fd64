//! Canonical domain printing. `parse(print(parse(t)))` equals `parse(t)`.

use super::ast::*;
use std::fmt;

impl fmt::Display for StaticGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negate {
            write!(f, "(not (= {} {}))", self.left, self.right)
        } else {
            write!(f, "(= {} {})", self.left, self.right)
        }
    }
}

impl fmt::Display for EffectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectItem::Lit(l) => write!(f, "{l}"),
            EffectItem::Forall { params, guard, lit } => {
                if params.is_empty() {
                    let guard = guard.as_ref().expect("parameterless forall without guard");
                    return write!(f, "(when {guard} {lit})");
                }
                write!(f, "(forall (")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ") ")?;
                match guard {
                    Some(g) => write!(f, "(when {g} {lit}))"),
                    None => write!(f, "{lit})"),
                }
            }
        }
    }
}

impl fmt::Display for OperatorSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(:action {}\n :parameters (", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")\n :precondition {}", self.pre_formula)?;
        write!(f, "\n :effects (and")?;
        for e in &self.eff {
            write!(f, " {e}")?;
        }
        write!(f, ")")?;
        if !self.ucond.is_empty() {
            write!(f, "\n :uconds (and")?;
            for a in &self.ucond {
                write!(f, " {a}")?;
            }
            write!(f, ")")?;
        }
        if !self.ueff.is_empty() {
            write!(f, "\n :ueffects (maybe")?;
            for a in &self.ueff {
                write!(f, " {a}")?;
            }
            write!(f, ")")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(:axiom {}\n :parameters (", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")\n :condition {})", self.condition)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.types_declared {
            write!(f, "(:types")?;
            for t in &self.types {
                write!(f, " {t}")?;
            }
            writeln!(f, ")")?;
        }
        if self.predicates_declared {
            write!(f, "(:predicates")?;
            for p in &self.predicates {
                write!(f, " ({}", p.name)?;
                for (i, ty) in p.arg_types.iter().enumerate() {
                    match ty {
                        Some(t) => write!(f, " ?a{i} - {t}")?,
                        None => write!(f, " ?a{i}")?,
                    }
                }
                write!(f, ")")?;
            }
            writeln!(f, ")")?;
        }
        for a in self.axioms.iter().filter(|a| !a.synthetic) {
            writeln!(f, "{a}")?;
        }
        for s in &self.schemata {
            writeln!(f, "{s}")?;
        }
        if let Some(goal) = &self.goal {
            writeln!(f, "(:reward {goal})")?;
        }
        Ok(())
    }
}

//! Parser, printer and grounding behaviour on the bundled domain fixtures.

use beliefmdp_core::symbolic::*;
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap()
}

fn atom(pred: &str, args: &[Term]) -> Atom {
    Atom { pred: pred.to_string(), args: args.to_vec() }
}

fn var(v: &str) -> Term {
    Term::Var(v.to_string())
}

fn cons(c: &str) -> Term {
    Term::Const(c.to_string())
}

#[test]
fn pick_listing_parses_to_expected_sets() {
    let dom = parse_domain(&fixture("pick.pddl")).unwrap();
    assert_eq!(dom.schemata.len(), 1);
    let s = &dom.schemata[0];
    assert_eq!(s.name, "pick");
    assert_eq!(s.params.len(), 2);

    let pre: Vec<_> = s.pre.iter().map(|l| (l.positive, l.atom.clone())).collect();
    assert_eq!(
        pre,
        vec![
            (true, atom("BVPose", &[var("o")])),
            (true, atom("BHandFree", &[])),
        ]
    );
    assert_eq!(
        s.eff,
        vec![EffectItem::Lit(Literal {
            positive: false,
            atom: atom("BVPose", &[var("o")]),
        })]
    );
    assert_eq!(s.ucond, vec![atom("BClass", &[var("o"), cons("glass")])]);
    assert_eq!(
        s.ueff,
        vec![
            atom("Broken", &[var("o")]),
            atom("BGrasp", &[var("o"), var("g")]),
        ]
    );
}

#[test]
fn noop_has_all_empty_clauses() {
    let dom = parse_domain(&fixture("noop.pddl")).unwrap();
    let s = &dom.schemata[0];
    assert!(s.params.is_empty());
    assert!(s.pre.is_empty());
    assert!(s.eff.is_empty());
    assert!(s.ucond.is_empty());
    assert!(s.ueff.is_empty());
}

#[test]
fn push_to_has_friction_ucond_and_ueffect() {
    let dom = parse_domain(&fixture("task_d.pddl")).unwrap();
    let s = dom.schema("push-to").unwrap();
    assert_eq!(s.ucond, vec![atom("KnownFriction", &[var("o")])]);
    assert_eq!(s.ueff, vec![atom("KnownFriction", &[var("o")])]);
    // (true) clauses are empty sets
    let nudge = dom.schema("nudge").unwrap();
    assert!(nudge.eff.is_empty());
    assert!(nudge.ucond.is_empty());
    // the reward axiom declares the goal
    assert_eq!(
        dom.goal,
        Some(Formula::Atom(atom("In", &[cons("puck"), cons("goal0")])))
    );
}

#[test]
fn round_trip_is_identity_on_all_fixtures() {
    for name in [
        "pick.pddl", "noop.pddl", "task_a.pddl", "task_b.pddl", "task_c.pddl",
        "task_d.pddl", "task_e.pddl", "hri.pddl", "declared.pddl",
    ] {
        let first = parse_domain(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = first.to_string();
        let second =
            parse_domain(&printed).unwrap_or_else(|e| panic!("{name} reprint: {e}\n{printed}"));
        assert_eq!(first, second, "{name} round trip\n{printed}");
    }
}

#[test]
fn when_effect_expands_into_schema_variants() {
    let dom = parse_domain(&fixture("task_c.pddl")).unwrap();
    assert!(dom.schema("pick").is_none());
    let t = dom.schema("pick-w0t").unwrap();
    let f = dom.schema("pick-w0f").unwrap();
    // both variants keep the uncertain Holding effect (verify normalization),
    // and the conditional guaranteed effect is dropped where it collides
    assert_eq!(t.ueff, vec![atom("Holding", &[var("o")])]);
    assert_eq!(f.ueff, vec![atom("Holding", &[var("o")])]);
    assert!(t.eff.iter().all(|e| match e {
        EffectItem::Lit(l) => l.atom.pred != "Holding",
        _ => true,
    }));
    // the true-branch precondition gained the `when` condition
    assert!(t.pre.iter().any(|l| l.positive && l.atom.pred == "holding"));
    assert!(f.pre.iter().any(|l| !l.positive && l.atom.pred == "holding"));
}

#[test]
fn verify_in_effects_marks_uncertain() {
    let dom = parse_domain(&fixture("task_c.pddl")).unwrap();
    let look = dom.schema("look").unwrap();
    assert_eq!(look.ueff, vec![atom("KnownPose", &[var("o1")])]);
    assert_eq!(look.ucond, vec![atom("Moved", &[var("o2")])]);
}

#[test]
fn complex_preconditions_become_synthetic_axioms() {
    let dom = parse_domain(&fixture("task_b.pddl")).unwrap();
    let stack = dom.schema("stack").unwrap();
    // the (or ..) conjunct compiles to a synthetic derived predicate
    let synth: Vec<_> = dom.axioms.iter().filter(|a| a.synthetic).collect();
    assert!(!synth.is_empty());
    assert!(stack
        .pre
        .iter()
        .any(|l| dom.axioms.iter().any(|a| a.synthetic && a.name == l.atom.pred)));
}

#[test]
fn ueff_wins_collision_with_guaranteed_effects() {
    let dom = parse_domain(&fixture("task_e.pddl")).unwrap();
    let s = dom.schema("move_pick").unwrap();
    assert!(s.ueff.contains(&atom("Holding", &[var("t")])));
    assert!(s.ueff.contains(&atom("KnownPose", &[])));
    for item in &s.eff {
        if let EffectItem::Lit(l) = item {
            assert!(!s.ueff.contains(&l.atom), "collision left in eff: {l}");
        }
    }
}

#[test]
fn syntax_error_reports_position() {
    let err = parse_domain(&fixture("bad_truncated.pddl")).unwrap_err();
    match err {
        // the innermost unclosed list is the `(and ..` on line 3
        DomainError::Syntax { line, .. } => assert_eq!(line, 3),
        other => panic!("expected syntax error, got {other}"),
    }
}

#[test]
fn undeclared_predicate_is_an_error_in_declared_mode() {
    let err = parse_domain(&fixture("bad_undeclared.pddl")).unwrap_err();
    match err {
        DomainError::UnknownPredicate { name, .. } => assert_eq!(name, "HandEmpty"),
        other => panic!("expected unknown predicate, got {other}"),
    }
}

#[test]
fn arity_mismatch_is_detected() {
    let err = parse_domain(&fixture("bad_arity.pddl")).unwrap_err();
    assert!(matches!(err, DomainError::ArityMismatch { .. }), "{err}");
}

#[test]
fn type_mismatch_is_detected() {
    let err = parse_domain(&fixture("bad_type.pddl")).unwrap_err();
    assert!(matches!(err, DomainError::TypeMismatch { .. }), "{err}");
}

#[test]
fn unbound_variable_is_detected() {
    let err = parse_domain("(:action a :parameters () :effects (and (P ?x)))").unwrap_err();
    assert!(matches!(err, DomainError::Semantic { .. }), "{err}");
}

#[test]
fn more_than_eight_ueffects_is_rejected() {
    let text = "(:action a :parameters () :ueffects (maybe (P1) (P2) (P3) (P4) (P5) (P6) (P7) (P8) (P9)))";
    let err = parse_domain(text).unwrap_err();
    assert!(matches!(err, DomainError::TooManyUncertainEffects(_, 9)), "{err}");
}

// ---------------------------------------------------------------------------
// grounding
// ---------------------------------------------------------------------------

fn pick_pools() -> Vec<(String, Vec<String>)> {
    vec![
        ("object".into(), vec!["a".into(), "b".into()]),
        ("grasp".into(), vec!["g1".into()]),
        ("class".into(), vec!["glass".into()]),
    ]
}

#[test]
fn grounding_is_the_cartesian_product() {
    let dom = parse_domain(&fixture("pick.pddl")).unwrap();
    let p = Problem::new(dom, &pick_pools()).unwrap();
    assert_eq!(p.operators.len(), 2); // 2 objects x 1 grasp

    let dom = parse_domain(&fixture("noop.pddl")).unwrap();
    let p = Problem::new(dom, &[]).unwrap();
    assert_eq!(p.operators.len(), 1); // zero params -> exactly one operator
}

#[test]
fn grounding_order_is_lexicographic() {
    let dom = parse_domain(&fixture("pick.pddl")).unwrap();
    let pools = vec![
        ("object".into(), vec!["a".into(), "b".into()]),
        ("grasp".into(), vec!["g1".into(), "g2".into()]),
        ("class".into(), vec!["glass".into()]),
    ];
    let p = Problem::new(dom, &pools).unwrap();
    let names: Vec<String> = p.operators.iter().map(|op| p.format_op(op)).collect();
    assert_eq!(names, vec!["pick(a,g1)", "pick(a,g2)", "pick(b,g1)", "pick(b,g2)"]);
}

#[test]
fn missing_pool_is_an_error() {
    let dom = parse_domain(&fixture("pick.pddl")).unwrap();
    let mut p = Problem::new(
        dom,
        &[
            ("object".into(), vec!["a".into()]),
            ("class".into(), vec!["glass".into()]),
        ],
    )
    .unwrap();
    // construction skipped the schema; explicit grounding reports the gap
    assert!(p.operators.is_empty());
    assert_eq!(p.ground_schema(0), Err(DomainError::MissingPool("grasp".into())));
}

#[test]
fn applicable_checks_signed_preconditions() {
    let dom = parse_domain(&fixture("pick.pddl")).unwrap();
    let p = Problem::new(dom, &pick_pools()).unwrap();
    let op = p.op(0);
    let bvpose_a = p.prop_id("BVPose", &["a"]).unwrap();
    let handfree = p.prop_id("BHandFree", &[]).unwrap();

    let b = AbstractBelief::from_true_props([bvpose_a, handfree]);
    assert!(p.applicable(op, &b));
    let b = AbstractBelief::from_true_props([bvpose_a]);
    assert!(!p.applicable(op, &b));

    // empty precondition is vacuously true
    let dom = parse_domain(&fixture("noop.pddl")).unwrap();
    let p = Problem::new(dom, &[]).unwrap();
    assert!(p.applicable(p.op(0), &AbstractBelief::empty()));
}

#[test]
fn apply_outcome_applies_effects_then_outcome_assignment() {
    let text = "(:action t :parameters ()
        :precondition (and)
        :effects (and (not (P)))
        :ueffects (maybe (Q)))";
    let dom = parse_domain(text).unwrap();
    let p = Problem::new(dom, &[]).unwrap();
    let prop_p = p.prop_id("P", &[]).unwrap();
    let prop_q = p.prop_id("Q", &[]).unwrap();

    let from = AbstractBelief::from_true_props([prop_p]);
    let got = p.apply_outcome(&from, p.op(0), &[true]).unwrap();
    assert_eq!(got, AbstractBelief::from_true_props([prop_q]));

    // all-false assignment with no effects leaves the belief unchanged
    let text = "(:action t :parameters () :effects (and) :ueffects (maybe (Q)))";
    let dom = parse_domain(text).unwrap();
    let p = Problem::new(dom, &[]).unwrap();
    let q = p.prop_id("Q", &[]).unwrap();
    let from = AbstractBelief::from_true_props([q]);
    let got = p.apply_outcome(&from, p.op(0), &[false]).unwrap();
    assert!(!got.get(q));

    // add-only effect
    let text = "(:action t :parameters () :effects (and (P)))";
    let dom = parse_domain(text).unwrap();
    let p = Problem::new(dom, &[]).unwrap();
    let prop_p = p.prop_id("P", &[]).unwrap();
    let got = p.apply_outcome(&AbstractBelief::empty(), p.op(0), &[]).unwrap();
    assert_eq!(got, AbstractBelief::from_true_props([prop_p]));
}

#[test]
fn apply_outcome_rejects_partial_assignments() {
    let dom = parse_domain("(:action t :parameters () :ueffects (maybe (Q) (R)))").unwrap();
    let p = Problem::new(dom, &[]).unwrap();
    let err = p.apply_outcome(&AbstractBelief::empty(), p.op(0), &[true]).unwrap_err();
    assert_eq!(err, DomainError::PartialAssignment { expected: 2, got: 1 });
}

#[test]
fn axiom_partial_arity_is_existential() {
    let dom = parse_domain(&fixture("task_c.pddl")).unwrap();
    let pools = vec![
        ("physical".into(), vec!["die".into(), "box1".into()]),
        ("conf".into(), vec!["q0".into()]),
    ];
    let p = Problem::new(dom, &pools).unwrap();
    // `(holding)` with zero arguments means "holding anything"
    let holding0 = p.prop_id("holding", &[]).unwrap();
    let holding_die = p.prop_id("Holding", &["die"]).unwrap();
    let mut b = AbstractBelief::from_true_props([holding_die]);
    p.recompute_derived(&mut b);
    assert!(b.get(holding0));
    let mut b = AbstractBelief::empty();
    p.recompute_derived(&mut b);
    assert!(!b.get(holding0));
    // full-arity derived predicate takes its argument
    let ht_die = p.prop_id("HoldingTarget", &["die"]).unwrap();
    let is_target = p.prop_id("IsTarget", &["die"]).unwrap();
    let mut b = AbstractBelief::from_true_props([holding_die, is_target]);
    p.recompute_derived(&mut b);
    assert!(b.get(ht_die));
}

#[test]
fn forall_effect_resolves_equality_guards_at_grounding() {
    let dom = parse_domain(&fixture("task_e.pddl")).unwrap();
    let pools = vec![
        ("target".into(), vec!["blk".into()]),
        ("region".into(), vec!["r1".into(), "r2".into()]),
    ];
    let p = Problem::new(dom, &pools).unwrap();
    let op = p.op(p.op_id_by_name("move_place", &["blk", "r1"]).unwrap());
    let notin_r1 = p.prop_id("NotIn", &["r1"]).unwrap();
    let notin_r2 = p.prop_id("NotIn", &["r2"]).unwrap();
    // the guard (not (= ?r ?r2)) keeps only the other region
    assert!(op.eff.iter().any(|&(pr, sign)| pr == notin_r2 && sign));
    assert!(!op.eff.iter().any(|&(pr, _)| pr == notin_r1));
}

#[test]
fn goal_with_quantifiers_evaluates_on_abstract_beliefs() {
    let dom = parse_domain(&fixture("task_c.pddl")).unwrap();
    let pools = vec![
        ("physical".into(), vec!["die".into(), "box1".into()]),
        ("conf".into(), vec!["q0".into()]),
    ];
    let p = Problem::new(dom, &pools).unwrap();
    let is_target = p.prop_id("IsTarget", &["die"]).unwrap();
    let holding_die = p.prop_id("Holding", &["die"]).unwrap();
    let at_home = p.prop_id("AtHome", &[]).unwrap();

    let mut b = AbstractBelief::from_true_props([is_target, holding_die, at_home]);
    p.recompute_derived(&mut b);
    assert!(p.eval_goal(&b));

    let mut b = AbstractBelief::from_true_props([is_target, at_home]);
    p.recompute_derived(&mut b);
    assert!(!p.eval_goal(&b));
}

proptest! {
    // propositions outside Eff and UEff are bit-identical before and after
    #[test]
    fn apply_outcome_frame_property(
        true_before in proptest::collection::vec(0u32..40, 0..12),
        psi in proptest::collection::vec(any::<bool>(), 2),
    ) {
        let text = "(:predicates (P0) (P1) (P2) (P3) (P4) (P5) (P6) (P7) (P8) (P9)
                     (Q0) (Q1) (R0) (R1))
            (:action t :parameters ()
             :precondition (and)
             :effects (and (P0) (not (P1)))
             :ueffects (maybe (Q0) (Q1)))";
        let dom = parse_domain(text).unwrap();
        let p = Problem::new(dom, &[]).unwrap();
        let universe = p.universe_len() as u32;
        let before = AbstractBelief::from_true_props(
            true_before.into_iter().map(|x| x % universe),
        );
        let op = p.op(0).clone();
        let after = p.apply_outcome(&before, &op, &psi).unwrap();
        let touched: Vec<u32> = op.eff.iter().map(|&(pr, _)| pr)
            .chain(op.ueff.iter().copied()).collect();
        for prop in 0..universe {
            if !touched.contains(&prop) {
                prop_assert_eq!(before.get(prop), after.get(prop), "prop {}", prop);
            }
        }
        // determinism
        let again = p.apply_outcome(&before, &op, &psi).unwrap();
        prop_assert_eq!(after, again);
    }
}

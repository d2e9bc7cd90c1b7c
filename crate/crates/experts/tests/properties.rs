use std::sync::Arc;

use ahp_core::PairwiseMatrix;
use ahp_experts::backend::{ScriptedBackend, SyntheticExpert};
use ahp_experts::conversation::{ContextBudget, Conversation};
use ahp_experts::parse::{parse_matrices, parse_saaty_value, render_matrix_table};
use ahp_experts::{converse, ExpertPersona, Intent, MatrixRequest, Prompt};
use proptest::prelude::*;

fn scale_value() -> impl Strategy<Value = f64> {
    (-8i32..=8).prop_map(|k| {
        if k >= 0 {
            f64::from(k + 1)
        } else {
            1.0 / f64::from(1 - k)
        }
    })
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("Item {i}")).collect()
}

fn discrete_matrix() -> impl Strategy<Value = PairwiseMatrix> {
    (3usize..=9).prop_flat_map(|n| {
        prop::collection::vec(scale_value(), n * (n - 1) / 2)
            .prop_map(move |upper| PairwiseMatrix::from_upper_triangle(labels(n), &upper).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rendered_matrices_reparse_exactly(m in discrete_matrix()) {
        let req = MatrixRequest { node: "Node".into(), labels: m.labels().to_vec() };
        let text = render_matrix_table(&req.node, &m);
        let back = parse_matrices(&text, std::slice::from_ref(&req)).unwrap().remove(0);
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(render_matrix_table(&req.node, &back), text);
    }

    #[test]
    fn scale_points_parse_to_themselves(v in scale_value()) {
        prop_assert_eq!(parse_saaty_value(&ahp_core::csv_format::format_ratio(v)).unwrap(), v);
        prop_assert_eq!(parse_saaty_value(&format!("{v:.7}")).unwrap(), v);
    }

    #[test]
    fn scripted_replies_are_deterministic(name in "[A-Z][a-z]{2,8}", n in 3usize..8) {
        let backend = ScriptedBackend::default().with_responder(Arc::new(SyntheticExpert));
        let persona = ExpertPersona::expert(&name, None, "d", "i");
        let prompt = Prompt {
            text: "matrices".into(),
            intent: Intent::Matrices { requests: vec![MatrixRequest { node: "Goal".into(), labels: labels(n) }] },
        };
        let budget = ContextBudget::default();
        let mut a = Conversation::new(&persona);
        let mut b = Conversation::new(&persona);
        let ra = converse(&backend, &persona, &mut a, &prompt, &budget).unwrap();
        let rb = converse(&backend, &persona, &mut b, &prompt, &budget).unwrap();
        prop_assert_eq!(ra, rb);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn token_count_never_decreases(words in prop::collection::vec(0usize..40, 1..12)) {
        let backend = ScriptedBackend::default().with_responder(Arc::new(SyntheticExpert));
        let persona = ExpertPersona::expert("Ann", None, "d", "some instructions");
        let mut conv = Conversation::new(&persona);
        let budget = ContextBudget { max_tokens: u32::MAX, rotate_fraction: 0.9 };
        let mut last = conv.cumulative_tokens();
        for w in words {
            converse(&backend, &persona, &mut conv, &Prompt::freeform("w ".repeat(w)), &budget).unwrap();
            prop_assert!(conv.cumulative_tokens() >= last);
            last = conv.cumulative_tokens();
        }
    }
}

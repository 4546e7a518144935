use std::collections::BTreeSet;

use proptest::prelude::*;

use star_asqp::augment::{enumerate_quad_orders, render_quad_target, OrderTemplate};
use star_asqp::dataset::{
    compute_stats, parse_dataset_line, read_canonical, write_canonical, Dataset, ElementOrder, Example, Split,
};
use star_asqp::eval::{score_exact_match, QuadsById};
use star_asqp::infer::{aggregate_votes, parse_target, OrderView};
use star_asqp::loss::{balanced_contribution_loss, pooled_sum_loss};
use star_asqp::model::{map_quad, unmap_quad, ElementKind, Polarity, Quad, Sentence};
use star_asqp::order::{select_top_k, OrderScore};

fn polarity() -> impl Strategy<Value = Polarity> {
    prop_oneof![
        Just(Polarity::Positive),
        Just(Polarity::Negative),
        Just(Polarity::Neutral)
    ]
}

// Words never collide with markers, the separator or the null word.
fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z][a-z'-]{0,7}", 1..4)
        .prop_filter("null word", |ws| ws.iter().all(|w| w != "it"))
        .prop_map(|ws| ws.join(" "))
}

fn span() -> impl Strategy<Value = String> {
    prop_oneof![1 => Just("NULL".to_string()), 4 => phrase()]
}

fn quad() -> impl Strategy<Value = Quad> {
    (span(), phrase(), span(), polarity()).prop_map(|(a, c, o, p)| Quad::new(a, c, o, p))
}

fn order() -> impl Strategy<Value = OrderTemplate> {
    (0usize..24).prop_map(|i| enumerate_quad_orders()[i])
}

fn small_quad() -> impl Strategy<Value = Quad> {
    (0u8..3, 0u8..2, polarity()).prop_map(|(a, c, p)| Quad::new(format!("a{a}"), format!("cat {c}"), "o", p))
}

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(
        ("[A-Za-z][A-Za-z .,!']{0,30}", prop::collection::vec(quad(), 0..4)),
        0..12,
    )
    .prop_map(|rows| {
        let examples = rows
            .into_iter()
            .enumerate()
            .map(|(i, (text, quads))| Example {
                sentence: Sentence::new(format!("d-{i}"), text),
                quads,
            })
            .collect();
        Dataset::new("d", Split::Dev, examples)
    })
}

fn losses(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mapping_round_trips(q in quad()) {
        let m = map_quad(&q);
        prop_assert!(["great", "bad", "ok"].contains(&m.sentiment.as_str()));
        prop_assert_eq!(unmap_quad(&m).unwrap(), q);
    }
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(quads in prop::collection::vec(quad(), 1..4)) {
        let mapped: Vec<_> = quads.iter().map(map_quad).collect();
        for t in enumerate_quad_orders() {
            let target = render_quad_target(&mapped, &t);
            let parsed = parse_target(&target, &t);
            prop_assert!(parsed.diagnostics.is_empty());
            prop_assert_eq!(&parsed.quads, &quads);
        }
    }

    #[test]
    fn orders_only_move_markers(quads in prop::collection::vec(quad(), 1..3), a in order(), b in order()) {
        let mapped: Vec<_> = quads.iter().map(map_quad).collect();
        let words = |t: &OrderTemplate| {
            let mut w: Vec<String> = render_quad_target(&mapped, t)
                .split_whitespace()
                .filter(|w| ElementKind::from_marker(w).is_none())
                .map(str::to_string)
                .collect();
            w.sort();
            w
        };
        prop_assert_eq!(words(&a), words(&b));
    }

    #[test]
    fn bcl_ignores_group_sizes(q in losses(20), p in losses(40), o in losses(8), which in 0usize..3) {
        let base = balanced_contribution_loss(&q, &p, &o).unwrap().total;
        let twice = |v: &Vec<f64>| v.iter().chain(v.iter()).copied().collect::<Vec<_>>();
        let dup = match which {
            0 => balanced_contribution_loss(&twice(&q), &p, &o),
            1 => balanced_contribution_loss(&q, &twice(&p), &o),
            _ => balanced_contribution_loss(&q, &p, &twice(&o)),
        }
        .unwrap()
        .total;
        prop_assert!((base - dup).abs() <= 1e-12 * base.max(1.0));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn bcl_is_three_pooled_for_equal_sizes(rows in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 1..30)) {
        let q: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let p: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let o: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let bcl = balanced_contribution_loss(&q, &p, &o).unwrap().total;
        let pooled = pooled_sum_loss(&q, &p, &o).unwrap();
        prop_assert!((bcl - 3.0 * pooled).abs() <= 1e-12 * bcl.max(1.0));
    }

    #[test]
    fn votes_are_monotone_and_order_free(
        views in prop::collection::vec(prop::collection::btree_set(small_quad(), 0..5), 1..6),
        t1 in 1u32..12,
        t2 in 1u32..12,
        rot in 0usize..6,
    ) {
        let orders = enumerate_quad_orders();
        let mk = |vs: &[BTreeSet<Quad>]| -> Vec<OrderView> {
            vs.iter().zip(&orders).map(|(q, &o)| OrderView::new(o, q.iter().cloned())).collect()
        };
        let (lo, hi) = (t1.min(t2) as f64 / 2.0, t1.max(t2) as f64 / 2.0);
        let low = aggregate_votes(&mk(&views), lo).unwrap();
        let high = aggregate_votes(&mk(&views), hi).unwrap();
        prop_assert!(high.is_subset(&low));
        let mut rotated = views.clone();
        rotated.rotate_left(rot % views.len());
        prop_assert_eq!(aggregate_votes(&mk(&rotated), lo).unwrap(), low);
    }

    #[test]
    fn eval_swap_symmetry(rows in prop::collection::vec((prop::collection::vec(small_quad(), 0..4), prop::collection::vec(small_quad(), 0..4)), 0..20)) {
        let pred: QuadsById = rows.iter().enumerate().map(|(i, r)| (format!("s{i}"), r.0.clone())).collect();
        let gold: QuadsById = rows.iter().enumerate().map(|(i, r)| (format!("s{i}"), r.1.clone())).collect();
        let ab = score_exact_match(&pred, &gold).unwrap();
        let ba = score_exact_match(&gold, &pred).unwrap();
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert_eq!(ab.f1, ba.f1);
        prop_assert!((0.0..=1.0).contains(&ab.f1));
        let same = score_exact_match(&gold, &gold).unwrap();
        prop_assert_eq!(same.f1, if same.n_gold == 0 { 0.0 } else { 1.0 });
    }

    #[test]
    fn top_k_ignores_input_order_and_shifts(raw in prop::collection::vec(-40i32..0, 24), k in 1usize..=24, shift in -50i32..50, seed in any::<u64>()) {
        let orders = enumerate_quad_orders();
        let scores: Vec<OrderScore> = orders.iter().zip(&raw).map(|(&order, &s)| OrderScore { order, score: s as f64 / 8.0 }).collect();
        let top = |v: &[OrderScore]| -> Vec<String> { select_top_k(v, k).unwrap().iter().map(|s| s.order.surface()).collect() };
        let base = top(&scores);
        prop_assert_eq!(base.len(), k);

        let mut shuffled = scores.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed.rotate_left(i as u32) as usize) % n);
        }
        prop_assert_eq!(top(&shuffled), base.clone());

        let shifted: Vec<OrderScore> = scores.iter().map(|s| OrderScore { order: s.order, score: s.score + shift as f64 }).collect();
        prop_assert_eq!(top(&shifted), base);
    }

    #[test]
    fn stats_ignore_sentence_order(d in dataset()) {
        let mut rev = d.clone();
        rev.examples.reverse();
        prop_assert_eq!(compute_stats(&d), compute_stats(&rev));
        prop_assert_eq!(compute_stats(&d).n_quads, d.examples.iter().map(|e| e.quads.len()).sum::<usize>());
    }

    #[test]
    fn canonical_jsonl_round_trips(d in dataset()) {
        let mut buf = Vec::new();
        write_canonical(&d, &mut buf).unwrap();
        let back = read_canonical(buf.as_slice(), "d", Split::Dev).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn raw_lines_parse_back(quads in prop::collection::vec(quad(), 0..4), layout in Just(vec!['a', 'c', 'o', 's']).prop_shuffle()) {
        let layout: String = layout.into_iter().collect();
        let order: ElementOrder = layout.parse().unwrap();
        let items: Vec<String> = quads
            .iter()
            .map(|q| {
                let fields: Vec<String> = layout
                    .chars()
                    .map(|c| match c {
                        'a' => q.aspect.clone(),
                        'c' => q.category.clone(),
                        'o' => q.opinion.clone(),
                        _ => q.polarity.to_string(),
                    })
                    .map(|f| serde_json::to_string(&f).unwrap())
                    .collect();
                format!("[{}]", fields.join(", "))
            })
            .collect();
        let line = format!("Some text here .####[{}]", items.join(", "));
        let ex = parse_dataset_line(&line, 1, "x", order).unwrap();
        prop_assert_eq!(ex.sentence.text, "Some text here .");
        prop_assert_eq!(ex.quads, quads);
    }
}

proptest! {
    #[test]
    fn order_score_is_linear_in_the_scorer(d in dataset(), t in order(), sa in any::<u64>(), sb in any::<u64>()) {
        use star_asqp::order::{score_order, SequenceScorer, ToyScorer};
        prop_assume!(d.examples.iter().any(|e| !e.quads.is_empty()));
        let (a, b) = (ToyScorer { salt: sa }, ToyScorer { salt: sb });
        let sum = |x: &str, y: &str| a.score(x, y) + b.score(x, y);
        let lhs = score_order(&t, &d, &sum).unwrap().score;
        let rhs = score_order(&t, &d, &a).unwrap().score + score_order(&t, &d, &b).unwrap().score;
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }
}

//! Synthesized gap fillers for the case-study fixture. The published record
//! gives only aggregates, so every individual judgment, ballot and
//! non-final candidate here is constructed, never observed. Constructions
//! are chosen so the published aggregates come back out.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use ahp_core::{consistency, PairwiseMatrix};

use super::data::{
    EXPERT_SUB_MATRIX, EXPERT_SUB_MATRIX_OWNER, FINAL_SCORES, LEAF_GLOBALS, TOP_MATRIX, TREE,
};

/// The 17 Saaty scale points, ascending.
pub fn scale() -> [f64; 17] {
    let mut out = [0.0; 17];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = if i < 8 {
            1.0 / (9 - i) as f64
        } else {
            (i - 7) as f64
        };
    }
    out
}

/// Fit target for a geometric mean of expert values.
pub const FIT_TOLERANCE: f64 = 0.0005;

struct Multiset {
    log_sum: f64,
    idx: Vec<u8>,
}

/// Every multiset of `k` scale points, sorted by log-sum.
fn multisets(k: usize) -> &'static [Multiset] {
    static SIX: OnceLock<Vec<Multiset>> = OnceLock::new();
    static SEVEN: OnceLock<Vec<Multiset>> = OnceLock::new();
    let cell = match k {
        6 => &SIX,
        7 => &SEVEN,
        _ => panic!("fixture multisets are built for 6 or 7 values"),
    };
    cell.get_or_init(|| {
        let logs: Vec<f64> = scale().iter().map(|v| v.ln()).collect();
        let mut out = Vec::new();
        let mut idx = vec![0u8; k];
        loop {
            out.push(Multiset {
                log_sum: idx.iter().map(|&i| logs[i as usize]).sum(),
                idx: idx.clone(),
            });
            // next non-decreasing sequence
            let mut p = k;
            while p > 0 && idx[p - 1] as usize == logs.len() - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            let v = idx[p - 1] + 1;
            for slot in &mut idx[p - 1..] {
                *slot = v;
            }
        }
        out.sort_by(|a, b| {
            a.log_sum
                .total_cmp(&b.log_sum)
                .then_with(|| a.idx.cmp(&b.idx))
        });
        out
    })
}

/// Chooses `k` scale values whose geometric mean together with `fixed`
/// lands on `target`. Among fits within [`FIT_TOLERANCE`] the one with the
/// smallest log spread wins; when none fits, the nearest mean wins.
/// Returns the values ascending.
pub fn fit_values(target: f64, k: usize, fixed: &[f64]) -> Vec<f64> {
    let table = multisets(k);
    let total = (k + fixed.len()) as f64;
    let fixed_log: f64 = fixed.iter().map(|v| v.ln()).sum();
    let values = scale();
    let mean_of = |m: &Multiset| ((m.log_sum + fixed_log) / total).exp();
    let spread_of = |m: &Multiset| {
        let logs: Vec<f64> = m
            .idx
            .iter()
            .map(|&i| values[i as usize].ln())
            .chain(fixed.iter().map(|v| v.ln()))
            .collect();
        let mean = logs.iter().sum::<f64>() / total;
        logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>()
    };
    let lo = total * (target - FIT_TOLERANCE).max(1e-9).ln() - fixed_log;
    let hi = total * (target + FIT_TOLERANCE).ln() - fixed_log;
    let start = table.partition_point(|m| m.log_sum < lo);
    let end = table.partition_point(|m| m.log_sum <= hi);
    let best = if start < end {
        table[start..end]
            .iter()
            .filter(|m| (mean_of(m) - target).abs() <= FIT_TOLERANCE)
            .min_by(|a, b| {
                spread_of(a)
                    .total_cmp(&spread_of(b))
                    .then_with(|| {
                        (mean_of(a) - target)
                            .abs()
                            .total_cmp(&(mean_of(b) - target).abs())
                    })
                    .then_with(|| a.idx.cmp(&b.idx))
            })
    } else {
        None
    };
    let best = best.unwrap_or_else(|| {
        let around = start.saturating_sub(64)..(end + 64).min(table.len());
        table[around]
            .iter()
            .min_by(|a, b| {
                (mean_of(a) - target)
                    .abs()
                    .total_cmp(&(mean_of(b) - target).abs())
                    .then_with(|| spread_of(a).total_cmp(&spread_of(b)))
                    .then_with(|| a.idx.cmp(&b.idx))
            })
            .expect("table is not empty")
    });
    best.idx.iter().map(|&i| values[i as usize]).collect()
}

/// Per-expert matrices whose geometric aggregate approximates the target
/// upper triangle. Each cell's fitted values go to the experts in the order
/// of their personal bias `bias(e, i) - bias(e, j)`, so an expert leaning
/// towards an item leans that way in every cell and stays close to
/// consistent. `pinned` fixes one expert's upper triangle.
pub fn expert_matrices(
    labels: &[String],
    target_upper: &[f64],
    experts: usize,
    pinned: Option<(usize, &[f64])>,
) -> Vec<PairwiseMatrix> {
    let n = labels.len();
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut uppers = vec![Vec::with_capacity(target_upper.len()); experts];
    for (cell, (&t, &(i, j))) in target_upper.iter().zip(&cells).enumerate() {
        let free: Vec<usize> = (0..experts)
            .filter(|&e| pinned.is_none_or(|(who, _)| who != e))
            .collect();
        let vals = match pinned {
            Some((_, fixed)) => fit_values(t, free.len(), &fixed[cell..=cell]),
            None => fit_values(t, free.len(), &[]),
        };
        let mut order = free.clone();
        order.sort_by(|&a, &b| {
            (bias(a, i) - bias(a, j))
                .total_cmp(&(bias(b, i) - bias(b, j)))
                .then(a.cmp(&b))
        });
        let mut assigned = vec![0.0; experts];
        for (&e, &v) in order.iter().zip(&vals) {
            assigned[e] = v;
        }
        if let Some((who, fixed)) = pinned {
            assigned[who] = fixed[cell];
        }
        for (upper, v) in uppers.iter_mut().zip(assigned) {
            upper.push(v);
        }
    }
    let free: Vec<usize> = (0..experts)
        .filter(|&e| pinned.is_none_or(|(who, _)| who != e))
        .collect();
    settle(labels, &mut uppers, &free);
    uppers
        .into_iter()
        .map(|u| {
            PairwiseMatrix::from_upper_triangle(labels.to_vec(), &u)
                .expect("fitted values are positive")
        })
        .collect()
}

fn penalty(labels: &[String], upper: &[f64]) -> f64 {
    let m = PairwiseMatrix::from_upper_triangle(labels.to_vec(), upper)
        .expect("fitted values are positive");
    let cr = consistency(&m).expect("matrix is well formed").1.cr;
    cr + 10.0 * (cr - 0.09).max(0.0)
}

/// Swaps values of one cell between two `free` experts while that lowers
/// their combined inconsistency penalty. A swap leaves every cell's
/// multiset, and so the aggregate, unchanged.
fn settle(labels: &[String], uppers: &mut [Vec<f64>], free: &[usize]) {
    if labels.len() < 3 {
        return;
    }
    let mut cost: Vec<f64> = uppers.iter().map(|u| penalty(labels, u)).collect();
    for _ in 0..50 {
        let mut improved = false;
        for cell in 0..uppers[0].len() {
            for (x, &a) in free.iter().enumerate() {
                for &b in &free[x + 1..] {
                    if uppers[a][cell] == uppers[b][cell] {
                        continue;
                    }
                    let (va, vb) = (uppers[a][cell], uppers[b][cell]);
                    uppers[a][cell] = vb;
                    uppers[b][cell] = va;
                    let (ca, cb) = (penalty(labels, &uppers[a]), penalty(labels, &uppers[b]));
                    if ca + cb < cost[a] + cost[b] - 1e-12 {
                        cost[a] = ca;
                        cost[b] = cb;
                        improved = true;
                    } else {
                        uppers[a][cell] = va;
                        uppers[b][cell] = vb;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Deterministic personal lean of expert `e` towards item `i`.
fn bias(e: usize, i: usize) -> f64 {
    ((e as f64 + 1.0) * 1.7 + (i as f64 + 1.0) * 2.9).sin()
}

pub fn upper_of_weights(w: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            out.push(w[i] / w[j]);
        }
    }
    out
}

pub fn top_upper() -> Vec<f64> {
    let mut out = Vec::new();
    for (i, row) in TOP_MATRIX.iter().enumerate() {
        out.extend_from_slice(&row[i + 1..]);
    }
    out
}

pub fn expert_sub_upper() -> Vec<f64> {
    vec![
        EXPERT_SUB_MATRIX[0][1],
        EXPERT_SUB_MATRIX[0][2],
        EXPERT_SUB_MATRIX[1][2],
    ]
}

/// Local priorities implied by the published globals: each leaf's global
/// over its siblings' sum.
pub fn sub_locals() -> Vec<Vec<f64>> {
    LEAF_GLOBALS
        .chunks(3)
        .map(|g| {
            let s: f64 = g.iter().sum();
            g.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Alternative index favored under each leaf, in tree order: 0 cloud
/// backup, 1 barriers, 2 personnel training, 3 employee training, 4 IDS.
pub const FAVORED: [usize; 21] = [
    3, 3, 4, 1, 2, 4, 4, 0, 4, 4, 2, 3, 4, 0, 2, 3, 3, 2, 4, 0, 0,
];

/// Weight put on the favored alternative of a leaf profile (the rest share
/// the remainder equally) and how far the leaf vectors lean towards it.
pub const FAVORED_WEIGHT: f64 = 0.4;
pub const LEAN: f64 = 0.5;

/// Per-leaf alternative priority vectors whose weighted-sum synthesis under the
/// (renormalized) published globals reproduces the published final scores
/// exactly: v = F + LEAN (p - p_bar), where p is the leaf's profile and
/// p_bar their global-weighted mean, so the weighted sum of the v is F.
pub fn leaf_vectors() -> Vec<Vec<f64>> {
    let n = FINAL_SCORES.len();
    let f_sum: f64 = FINAL_SCORES.iter().sum();
    let f: Vec<f64> = FINAL_SCORES.iter().map(|x| x / f_sum).collect();
    let g_sum: f64 = LEAF_GLOBALS.iter().sum();
    let rest = (1.0 - FAVORED_WEIGHT) / (n - 1) as f64;
    let profile = |fav: usize| -> Vec<f64> {
        (0..n)
            .map(|i| if i == fav { FAVORED_WEIGHT } else { rest })
            .collect()
    };
    let mut p_bar = vec![0.0; n];
    for (g, &fav) in LEAF_GLOBALS.iter().zip(&FAVORED) {
        for (slot, p) in p_bar.iter_mut().zip(profile(fav)) {
            *slot += g / g_sum * p;
        }
    }
    FAVORED
        .iter()
        .map(|&fav| {
            profile(fav)
                .iter()
                .zip(&f)
                .zip(&p_bar)
                .map(|((p, fi), pb)| fi + LEAN * (p - pb))
                .collect()
        })
        .collect()
}

/// Every expert's fitted matrices for the fixture tree, in panel order.
pub struct FixtureMatrices {
    pub top: Vec<PairwiseMatrix>,
    pub sub: BTreeMap<String, Vec<PairwiseMatrix>>,
    /// Keyed by leaf label (leaf labels are unique in the fixture tree).
    pub alternatives: BTreeMap<String, Vec<PairwiseMatrix>>,
}

pub fn fixture_matrices(expert_names: &[&str]) -> FixtureMatrices {
    let e = expert_names.len();
    let top_labels = super::data::top_labels();
    let top = expert_matrices(&top_labels, &top_upper(), e, None);
    let pinned_expert = expert_names
        .iter()
        .position(|n| *n == EXPERT_SUB_MATRIX_OWNER);
    let expert_sub = expert_sub_upper();
    let mut sub = BTreeMap::new();
    for ((parent, kids), locals) in TREE.iter().zip(sub_locals()) {
        let labels: Vec<String> = kids.iter().map(|k| k.to_string()).collect();
        let pinned = match (pinned_expert, *parent == TREE[0].0) {
            (Some(who), true) => Some((who, expert_sub.as_slice())),
            _ => None,
        };
        sub.insert(
            parent.to_string(),
            expert_matrices(&labels, &upper_of_weights(&locals), e, pinned),
        );
    }
    let alt_labels = super::data::alternative_labels();
    let leaves = TREE.iter().flat_map(|(_, kids)| kids.iter());
    let mut alternatives = BTreeMap::new();
    for (leaf, v) in leaves.zip(leaf_vectors()) {
        alternatives.insert(
            leaf.to_string(),
            expert_matrices(&alt_labels, &upper_of_weights(&v), e, None),
        );
    }
    FixtureMatrices {
        top,
        sub,
        alternatives,
    }
}

/// Extra sub-criteria proposed by the experts other than the first, per
/// parent in tree order. Finals are proposed by the first expert.
pub const SUB_EXTRAS: [[&str; 6]; 7] = [
    [
        "Phishing Simulation Results",
        "Security Culture Maturity",
        "Awareness Content Quality",
        "Employee Engagement Level",
        "Training Completion Rate",
        "Policy Acknowledgement Rate",
    ],
    [
        "Badge System Integrity",
        "Tailgating Prevention",
        "Perimeter Fencing Quality",
        "Guard Patrol Coverage",
        "Door Alarm Response",
        "Key Management Process",
    ],
    [
        "Log Retention Policy",
        "Tamper Evident Logging",
        "Audit Report Clarity",
        "Access Log Completeness",
        "Change Record Coverage",
        "Audit Tool Integration",
    ],
    [
        "Baseline Deviation Detection",
        "Insider Risk Indicators",
        "Login Pattern Review",
        "Privilege Usage Tracking",
        "Email Behavior Analytics",
        "Peer Group Comparison",
    ],
    [
        "Change Management Discipline",
        "Patch Cycle Timeliness",
        "Backup Restoration Testing",
        "Segregation of Duties",
        "Risk Register Currency",
        "Control Self Assessment",
    ],
    [
        "Stress Level Indicators",
        "Susceptibility Assessment",
        "Trust Propensity Evaluation",
        "Pretext Resistance Testing",
        "Job Satisfaction Tracking",
        "Background Screening Depth",
    ],
    [
        "Vendor Security Obligations",
        "Incident Notification Window",
        "Audit Right Clauses",
        "Service Availability Targets",
        "Subcontractor Security Terms",
        "Exit Transition Terms",
    ],
];

/// Five proposed alternatives per expert, in panel order. The five finals
/// sit with the experts whose field they belong to.
pub const ALTERNATIVE_PROPOSALS: [[&str; 5]; 7] = [
    [
        "Advanced Intrusion Detection Systems",
        "Phishing Simulation Campaigns",
        "Multi-Factor Authentication Rollout",
        "Security Operations Center Upgrade",
        "Zero Trust Network Architecture",
    ],
    [
        "Cloud-Based Data Backup Solutions",
        "Network Segmentation Overhaul",
        "Hardware Security Module Deployment",
        "Automated Patch Management",
        "Privileged Access Management Platform",
    ],
    [
        "Comprehensive Employee Training Programs",
        "Security Culture Change Initiative",
        "Peer Reporting Incentive Scheme",
        "Stress Aware Workload Planning",
        "Behavioral Risk Coaching Sessions",
    ],
    [
        "Regulatory Compliance Audit Program",
        "Data Privacy Policy Refresh",
        "Legal Incident Response Playbook",
        "Contractual Security Clauses Update",
        "Whistleblower Protection Policy",
    ],
    [
        "Enterprise Risk Assessment Program",
        "Cyber Insurance Coverage Review",
        "Business Continuity Plan Refresh",
        "Security Investment Prioritization Model",
        "Third-Party Risk Scoring",
    ],
    [
        "Physical Barrier Reinforcement",
        "Security Personnel Training Update",
        "Mantrap Entry Installation",
        "Visitor Escort Policy Enforcement",
        "CCTV Coverage Expansion",
    ],
    [
        "Vendor Security Assessment Program",
        "Supplier Access Restriction Policy",
        "Outsourcing Contract Security Review",
        "Shared Responsibility Model Definition",
        "External Partner Awareness Training",
    ],
];

/// The three sub-criteria expert `e` proposes under parent `p`.
pub fn sub_proposal(expert: usize, parent: usize) -> Vec<&'static str> {
    if expert == 0 {
        return TREE[parent].1.to_vec();
    }
    (0..3)
        .map(|j| SUB_EXTRAS[parent][(expert + j) % 6])
        .collect()
}

/// Ballot score of `item` from expert `e`. The finals, ranked `r` from 0,
/// total `62 - r` over seven ballots, so their selection order is the
/// published order; every other item totals at most 49.
pub fn ballot_score(
    expert: usize,
    persona_id: &str,
    scope: &str,
    item: &str,
    finals: &[&str],
) -> u8 {
    match finals.iter().position(|f| f.eq_ignore_ascii_case(item)) {
        Some(rank) => {
            let short = rank + 1;
            let lowered = (0..short).any(|j| (rank + j) % 7 == expert);
            if lowered {
                8
            } else {
                9
            }
        }
        None => 2 + (ahp_experts::backend::stable_hash(&[persona_id, scope, item]) % 6) as u8,
    }
}

/// Index of the expert whose first top-level matrix breaks reciprocity and
/// is corrected after a reminder.
pub const REPAIR_EXPERT: usize = 3;

#[cfg(test)]
mod tests {
    use super::*;
    use ahp_core::{aggregate, Aggregation};

    #[test]
    fn scale_is_ascending_and_reciprocal() {
        let s = scale();
        assert_eq!(s[0], 1.0 / 9.0);
        assert_eq!(s[8], 1.0);
        assert_eq!(s[16], 9.0);
        for i in 0..17 {
            assert_eq!(s[i], 1.0 / s[16 - i]);
        }
    }

    #[test]
    fn multiset_counts() {
        // C(17 + k - 1, k)
        assert_eq!(multisets(6).len(), 74_613);
        assert_eq!(multisets(7).len(), 245_157);
    }

    #[test]
    fn fitted_values_reach_the_target() {
        for t in [1.319, 0.369, 3.061, 1.0, 2.5] {
            let v = fit_values(t, 7, &[]);
            let gm = (v.iter().map(|x| x.ln()).sum::<f64>() / 7.0).exp();
            assert!((gm - t).abs() <= 0.004, "{t} -> {gm}");
        }
        let v = fit_values(2.0, 6, &[2.0]);
        assert_eq!(v.len(), 6);
    }

    #[test]
    fn leaf_vectors_synthesize_to_the_final_scores() {
        let vs = leaf_vectors();
        let g_sum: f64 = LEAF_GLOBALS.iter().sum();
        for v in &vs {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(v.iter().all(|x| *x > 0.1));
        }
        let f_sum: f64 = FINAL_SCORES.iter().sum();
        for a in 0..5 {
            let s: f64 = vs
                .iter()
                .zip(LEAF_GLOBALS)
                .map(|(v, g)| g / g_sum * v[a])
                .sum();
            assert!((s - FINAL_SCORES[a] / f_sum).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_expert_keeps_its_matrix() {
        let labels: Vec<String> = TREE[0].1.iter().map(|s| s.to_string()).collect();
        let ms = expert_matrices(
            &labels,
            &upper_of_weights(&sub_locals()[0]),
            7,
            Some((0, &expert_sub_upper())),
        );
        assert_eq!(ms[0].upper_triangle(), expert_sub_upper());
        let agg = aggregate(&ms, Aggregation::Geometric).unwrap();
        let target = upper_of_weights(&sub_locals()[0]);
        for (a, t) in agg.upper_triangle().iter().zip(&target) {
            assert!((a - t).abs() < 0.01, "{a} vs {t}");
        }
    }

    #[test]
    fn ballots_order_the_finals() {
        let finals = ["A", "B", "C"];
        let totals: Vec<u32> = finals
            .iter()
            .map(|f| {
                (0..7)
                    .map(|e| u32::from(ballot_score(e, "x", "", f, &finals)))
                    .sum()
            })
            .collect();
        assert_eq!(totals, vec![62, 61, 60]);
        let other: u32 = (0..7)
            .map(|e| u32::from(ballot_score(e, "x", "", "Z", &finals)))
            .sum();
        assert!(other <= 49);
    }
}

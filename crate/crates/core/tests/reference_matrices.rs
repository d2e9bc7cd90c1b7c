use ahp_core::csv_format::read_matrix;
use ahp_core::matrix::PairwiseMatrix;
use ahp_core::{consistency, lambda_max, normalize_columns, priority_vector};

const TOP_TABLE: &str = "\
Criteria,Social Engineering Awareness,Physical Access Controls,Audit Trails,Behavior Analysis,Operational Risk Controls,Psychological Profiling,Service Level Agreements
Social Engineering Awareness,1.000,1.319,1.104,1.483,1.081,0.498,0.369
Physical Access Controls,0.756,1.000,1.673,1.560,1.029,0.937,0.408
Audit Trails,0.904,0.601,1.000,1.251,0.701,0.756,0.325
Behavior Analysis,0.674,0.641,0.798,1.000,0.627,0.801,0.503
Operational Risk Controls,0.920,0.966,1.426,1.608,1.000,0.604,0.526
Psychological Profiling,2.007,1.068,1.319,1.247,1.636,1.000,0.652
Service Level Agreements,2.712,2.438,3.061,1.990,1.883,1.532,1.000
";

fn top_matrix() -> PairwiseMatrix<f64> {
    read_matrix(TOP_TABLE).unwrap()
}

#[test]
fn top_matrix_reciprocity_within_print_rounding_only() {
    let m = top_matrix();
    assert!(m.validate(0.01).is_ok());
    let strict = m.validate(1e-6);
    assert!(!strict.is_ok());
    // 1/1.319 = 0.7582 against a printed 0.756.
    assert!((1.0f64 / 1.319 - 0.758).abs() < 5e-4);
}

#[test]
fn top_matrix_last_column_normalization() {
    let norm = normalize_columns(&top_matrix());
    let col_sum: f64 = top_matrix().column(6).sum();
    assert!((col_sum - 3.783).abs() < 1e-9);
    assert!((norm[6][6] - 0.2644).abs() < 1e-4);
}

#[test]
fn top_matrix_priorities_and_consistency() {
    let m = top_matrix();
    let (w, r) = consistency(&m).unwrap();
    let published = [0.120, 0.131, 0.099, 0.096, 0.126, 0.164, 0.264];
    for (got, want) in w.weights.iter().zip(published) {
        assert!((got - want).abs() <= 0.005, "{got} vs {want}");
    }
    assert!((r.lambda_max - 7.13).abs() <= 0.05);
    assert!((r.ci - 0.022).abs() <= 0.002);
    assert!((r.cr - 0.016).abs() <= 0.004);
    assert_eq!(r.ri, 1.32);
    assert!(r.consistent);
    assert_eq!(lambda_max(&m, &priority_vector(&m)).unwrap(), r.lambda_max);
}

#[test]
fn expert_matrix_lambda_from_hand_weights() {
    let m = PairwiseMatrix::<f64>::from_upper_triangle(
        vec!["TPE".into(), "ASR".into(), "IRP".into()],
        &[2.0, 3.0, 2.0],
    )
    .unwrap();
    let w = ahp_core::priority::PriorityVector {
        labels: m.labels().to_vec(),
        weights: vec![0.539, 0.297, 0.164],
    };
    assert!((lambda_max(&m, &w).unwrap() - 3.009).abs() < 2e-3);
}

#[test]
fn single_precision_agrees_with_double() {
    let m = top_matrix();
    let m32 = m.map(|v| v as f32);
    let (w64, r64) = consistency(&m).unwrap();
    let (w32, r32) = consistency(&m32).unwrap();
    for (a, b) in w64.weights.iter().zip(&w32.weights) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
    assert!((r64.cr - r32.cr as f64).abs() < 1e-4);
}

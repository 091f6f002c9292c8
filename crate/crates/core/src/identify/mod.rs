//! Two-level identification: which dimensions matter (grouped Shapley),
//! then which features within them (LV-KB filter).

mod lvkb;
mod shapley;

pub use lvkb::{
    f_score, lvkb, select_features, variance_filter, FeatureScore, LvkbResult, Selection,
    DEFAULT_KBEST_THRESHOLD, DEFAULT_VARIANCE_THRESHOLD,
};
pub use shapley::{
    dimension_groups, grouped_shapley, sample_rows, shapley_exact, shapley_sampled,
    DimensionAttribution, Group, MAX_EXACT_GROUPS,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, ModelSpec};
    use crate::stdb::{Column, Dimension, FeatureTable};
    use chrono::NaiveDate;

    fn table(cols: Vec<(&str, Dimension, Vec<f64>)>) -> FeatureTable {
        let n = cols[0].2.len();
        let dates: Vec<NaiveDate> = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().iter_days().take(n).collect();
        let (columns, data): (Vec<Column>, Vec<Vec<f64>>) =
            cols.into_iter().map(|(name, d, v)| (Column::new(name, d, "u"), v)).unzip();
        FeatureTable::new(dates, columns, data, "load").unwrap()
    }

    #[test]
    fn f_score_worked_examples() {
        let (r, f) = f_score(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(f, f64::INFINITY);
        let (r, f) = f_score(&[1.0, 2.0, 1.0, 2.0], &[1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!((r, f), (0.0, 0.0));
        let (r, f) = f_score(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap();
        // sxy = 6.5, sxx = 5, syy = 8.75; f = r^2 / (1 - r^2) * (4 - 2) = 2 * 42.25 / 1.5.
        let r_hand = 6.5 / (5.0f64 * 8.75).sqrt();
        assert!((r - r_hand).abs() < 1e-12);
        assert!((r - 0.9827).abs() < 1e-4);
        assert!((f - 2.0 * 42.25 / 1.5).abs() < 1e-9);
        assert!((f - 56.3).abs() < 0.05);
        assert!(f_score(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn variance_and_selection_rules() {
        let t = table(vec![
            ("load", Dimension::L, vec![1.0, 2.0, 3.0, 5.0]),
            ("a", Dimension::G, vec![1.0, 2.0, 3.0, 4.0]),
            ("flat", Dimension::A, vec![3.0; 4]),
            ("pair", Dimension::I, vec![0.0, 2.0, 0.0, 2.0]),
        ]);
        let v = variance_filter(&t, 0.88);
        let pair = v.iter().find(|s| s.name == "pair").unwrap();
        assert_eq!(pair.variance, 1.0);
        assert!(pair.passed_variance);
        assert!(!v.iter().find(|s| s.name == "flat").unwrap().passed_variance);
        assert!(variance_filter(&t, 0.0).iter().all(|s| s.passed_variance));

        let res = lvkb(&t, 0.88, Selection::Threshold(10.0)).unwrap();
        assert_eq!(res.identified, vec!["a".to_string()]);
        assert_eq!(res.scores[0].name, "a");
        for s in &res.scores {
            assert!(!s.passed_kbest || s.passed_variance);
        }
        let top = lvkb(&t, 0.0, Selection::TopK(2)).unwrap();
        assert_eq!(top.identified.len(), 2);
    }

    #[test]
    fn degenerate_table_identifies_nothing() {
        let t = table(vec![("load", Dimension::L, vec![1.0, 2.0, 4.0]), ("c", Dimension::S, vec![5.0; 3])]);
        assert!(lvkb(&t, 0.88, Selection::Threshold(10.0)).unwrap().identified.is_empty());
    }

    fn linear_fixture() -> (FeatureTable, [f64; 4]) {
        let n = 80;
        let wave = |f: f64, p: f64| (0..n).map(|i| (f * i as f64 + p).sin() * 3.0 + 5.0).collect::<Vec<f64>>();
        let g = wave(0.31, 0.0);
        let a = wave(0.77, 1.0);
        let i = wave(0.13, 2.0);
        let s = wave(1.91, 0.5);
        let beta = [1.5, -2.0, 0.0, 0.7];
        let y: Vec<f64> = (0..n).map(|k| 10.0 + beta[0] * g[k] + beta[1] * a[k] + beta[2] * i[k] + beta[3] * s[k]).collect();
        let t = table(vec![
            ("load", Dimension::L, y),
            ("g", Dimension::G, g),
            ("a", Dimension::A, a),
            ("i", Dimension::I, i),
            ("s", Dimension::S, s),
        ]);
        (t, beta)
    }

    #[test]
    fn shapley_linear_closed_form_and_efficiency() {
        let (t, beta) = linear_fixture();
        let m = fit(&ModelSpec::ridge(1e-12, 0), &t).unwrap();
        let samples: Vec<usize> = (0..t.n_rows()).collect();
        let att = grouped_shapley(&m, &t, &samples).unwrap();
        assert_eq!(att.groups, vec!["G", "A", "I", "S"]);
        let names = ["g", "a", "i", "s"];
        let means: Vec<f64> = names.iter().map(|n| crate::stats::mean(t.column(n).unwrap())).collect();
        for (s, &row) in samples.iter().enumerate() {
            let sum: f64 = att.values[s].iter().sum();
            assert!((sum + att.baseline - att.predictions[s]).abs() < 1e-8);
            for k in 0..4 {
                let x = t.column(names[k]).unwrap()[row];
                assert!((att.values[s][k] - beta[k] * (x - means[k])).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn null_and_single_group() {
        let (t, _) = linear_fixture();
        // A tree model never splits on a column that is constant in training.
        let data: Vec<Vec<f64>> = t
            .columns()
            .iter()
            .zip(t.data())
            .map(|(c, v)| if c.name == "i" { vec![2.0; v.len()] } else { v.clone() })
            .collect();
        let t2 = FeatureTable::new(t.dates().to_vec(), t.columns().to_vec(), data, "load").unwrap();
        let m2 = fit(&ModelSpec::gbrt(Default::default(), 0), &t2).unwrap();
        let att = grouped_shapley(&m2, &t2, &[0, 5, 9]).unwrap();
        let k = att.groups.iter().position(|g| g == "I").unwrap();
        assert!(att.values.iter().all(|v| v[k] == 0.0));

        let one = vec![Group { name: "all".into(), columns: (0..4).collect() }];
        let att = shapley_exact(&m2, &t2, &[3], &one).unwrap();
        assert!((att.values[0][0] - (att.predictions[0] - att.baseline)).abs() < 1e-12);
    }

    #[test]
    fn too_many_groups_needs_sampling() {
        let n = 60;
        let mut cols = vec![("load", Dimension::L, (0..n).map(|i| i as f64).collect::<Vec<_>>())];
        let names = ["c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8"];
        for (k, name) in names.iter().enumerate() {
            cols.push((name, Dimension::G, (0..n).map(|i| ((i * (k + 2)) % 7) as f64).collect()));
        }
        let t = table(cols);
        let m = fit(&ModelSpec::ridge(1e-6, 0), &t).unwrap();
        let groups: Vec<Group> = (0..9).map(|k| Group { name: format!("g{k}"), columns: vec![k] }).collect();
        let err = shapley_exact(&m, &t, &[0], &groups).unwrap_err();
        assert!(err.to_string().contains("use sampling variant"));
        let att = shapley_sampled(&m, &t, &[0, 1], &groups, 64, 5).unwrap();
        for s in 0..2 {
            let sum: f64 = att.values[s].iter().sum();
            assert!((sum + att.baseline - att.predictions[s]).abs() < 1e-8);
        }
    }
}

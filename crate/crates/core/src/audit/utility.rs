use super::{AuditError, Vectorizer};
use crate::baselines::{fit_logistic_regression, predict_proba, LogRegConfig};
use crate::data_model::{FeatureMatrix, SequentialDataset, TabularDataset};
use crate::metrics::{auroc, MetricValue};

use super::PatientVectors;

fn as_matrix(v: PatientVectors) -> FeatureMatrix {
    let n = v.len();
    FeatureMatrix::new(n, v.width, v.values, alloc::vec![alloc::string::String::new(); v.width])
}

fn train_and_score(
    train: FeatureMatrix,
    train_y: &[u8],
    test: FeatureMatrix,
    test_y: &[u8],
    config: LogRegConfig,
) -> Result<MetricValue, AuditError> {
    if test_y.iter().all(|&y| y == test_y[0]) {
        return Err(AuditError::SingleClassTest);
    }
    let model = fit_logistic_regression(&train, train_y, config)?;
    Ok(auroc(&predict_proba(&model, &test)?, test_y)?)
}

/// AUROC on `real_test` of logistic regression trained on labelled
/// synthetic records, vectorized with statistics of the synthetic set.
pub fn utility_sequential(
    synthetic_train: &SequentialDataset,
    real_test: &SequentialDataset,
    config: LogRegConfig,
) -> Result<MetricValue, AuditError> {
    let train_y = synthetic_train.labels().ok_or(AuditError::MissingLabels)?;
    let test_y = real_test.labels().ok_or(AuditError::MissingLabels)?;
    let v = Vectorizer::fit_sequential(synthetic_train)?;
    let train = as_matrix(v.sequential(synthetic_train, "synthetic")?);
    let test = as_matrix(v.sequential(real_test, "test")?);
    train_and_score(train, &train_y, test, &test_y, config)
}

pub fn utility_tabular(
    synthetic_train: &TabularDataset,
    real_test: &TabularDataset,
    config: LogRegConfig,
) -> Result<MetricValue, AuditError> {
    let train_y = synthetic_train.binary_labels()?;
    let test_y = real_test.binary_labels()?;
    let v = Vectorizer::fit_tabular(synthetic_train)?;
    let train = as_matrix(v.tabular(synthetic_train, "synthetic")?);
    let test = as_matrix(v.tabular(real_test, "test")?);
    train_and_score(train, &train_y, test, &test_y, config)
}

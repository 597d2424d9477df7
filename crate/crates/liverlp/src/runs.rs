//! Batch runs of a classifier over a dataset.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ClassifierError};
use crate::records::Dataset;
use crate::schema::Schema;
use crate::scoring::{batch_text, CaseResult, CaseScore, Compiled, Explanation, ScoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseExplanation {
    pub case_id: i64,
    pub explanations: Vec<Explanation>,
    pub trees: String,
}

/// An executed run. Written once and never modified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub run_id: String,
    pub classifier_id: String,
    pub classifier_version: u64,
    pub dataset_id: String,
    pub created: DateTime<Utc>,
    pub scores: Vec<CaseScore>,
    pub explanations: Vec<CaseExplanation>,
    /// Cases the solver could not score.
    pub failures: Vec<ScoreError>,
}

impl Run {
    /// Scores every case of the dataset. The run id is left empty for the
    /// store to assign.
    pub fn execute(
        classifier: &Classifier,
        schema: &Schema,
        dataset: &Dataset,
        created: DateTime<Utc>,
    ) -> Result<Run, ClassifierError> {
        let compiled = Compiled::new(classifier, schema)?;
        let mut run = Run {
            run_id: String::new(),
            classifier_id: classifier.id.clone(),
            classifier_version: classifier.version,
            dataset_id: dataset.id.clone(),
            created,
            scores: Vec::new(),
            explanations: Vec::new(),
            failures: Vec::new(),
        };
        for outcome in compiled.score_all(&dataset.records) {
            match outcome {
                Ok(r) => run.push(r),
                Err(e) => run.failures.push(e),
            }
        }
        Ok(run)
    }

    fn push(&mut self, r: CaseResult) {
        self.explanations.push(CaseExplanation {
            case_id: r.score.case_id,
            explanations: r.explanations,
            trees: r.trees,
        });
        self.scores.push(r.score);
    }

    pub fn case(&self, case_id: i64) -> Option<CaseResult> {
        let score = self.scores.iter().find(|s| s.case_id == case_id)?;
        let ex = self.explanations.iter().find(|e| e.case_id == case_id)?;
        Some(CaseResult {
            score: score.clone(),
            explanations: ex.explanations.clone(),
            trees: ex.trees.clone(),
        })
    }

    pub fn cases(&self) -> Vec<CaseResult> {
        self.scores.iter().filter_map(|s| self.case(s.case_id)).collect()
    }

    /// The run as a solver listing.
    pub fn text(&self) -> String {
        let cases = self.cases();
        batch_text(&cases.iter().collect::<Vec<_>>())
    }
}

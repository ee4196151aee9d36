use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

/// A view command returned to the client. On the wire:
/// `{"action_type": "...", "parameters": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action_type", content = "parameters", rename_all = "snake_case", deny_unknown_fields)]
pub enum UIAction {
    HighlightClusters(Vec<u32>),
    SelectPmids(Vec<String>),
    SetYearFilter([i32; 2]),
    PinPapers(Vec<String>),
    Annotate(Annotation),
    FlyTo(Camera),
    ClearHighlight(NoParameters),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub x: f64,
    pub y: f64,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Camera {
    pub x: f64,
    pub y: f64,
    pub zoom: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParameters {}

impl UIAction {
    pub fn action_type(&self) -> &'static str {
        match self {
            UIAction::HighlightClusters(_) => "highlight_clusters",
            UIAction::SelectPmids(_) => "select_pmids",
            UIAction::SetYearFilter(_) => "set_year_filter",
            UIAction::PinPapers(_) => "pin_papers",
            UIAction::Annotate(_) => "annotate",
            UIAction::FlyTo(_) => "fly_to",
            UIAction::ClearHighlight(_) => "clear_highlight",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("{action_type}: {message}")]
pub struct ActionError {
    pub action_type: String,
    pub message: String,
}

/// Schema and reference check of one action against `dataset`.
pub fn validate_action(action: &UIAction, dataset: &Dataset) -> Result<(), ActionError> {
    let fail = |message: String| {
        Err(ActionError {
            action_type: action.action_type().to_string(),
            message,
        })
    };
    let pmids_ok = |pmids: &[String]| -> Result<(), String> {
        if pmids.is_empty() {
            return Err("pmid list is empty".into());
        }
        match pmids.iter().find(|p| dataset.corpus.index_of(p).is_none()) {
            Some(p) => Err(format!("unknown pmid {p}")),
            None => Ok(()),
        }
    };
    match action {
        UIAction::HighlightClusters(ids) => {
            if ids.is_empty() {
                return fail("cluster list is empty".into());
            }
            if let Some(c) = ids.iter().find(|&&c| !dataset.has_cluster(c)) {
                return fail(format!("unknown cluster {c}"));
            }
        }
        UIAction::SelectPmids(p) | UIAction::PinPapers(p) => {
            if let Err(m) = pmids_ok(p) {
                return fail(m);
            }
        }
        UIAction::SetYearFilter([lo, hi]) => {
            if lo > hi {
                return fail(format!("min {lo} exceeds max {hi}"));
            }
        }
        UIAction::Annotate(Annotation { x, y, text }) => {
            if !(x.is_finite() && y.is_finite()) {
                return fail("position must be finite".into());
            }
            if text.trim().is_empty() {
                return fail("text is empty".into());
            }
        }
        UIAction::FlyTo(Camera { x, y, zoom }) => {
            if !(x.is_finite() && y.is_finite()) {
                return fail("position must be finite".into());
            }
            if !(zoom.is_finite() && *zoom > 0.0) {
                return fail(format!("zoom {zoom} must be positive"));
            }
        }
        UIAction::ClearHighlight(_) => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::testkit::fixture;

    #[test]
    fn wire_shape() {
        let a = UIAction::HighlightClusters(vec![3]);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            r#"{"action_type":"highlight_clusters","parameters":[3]}"#
        );
        let f: UIAction = serde_json::from_str(r#"{"action_type":"fly_to","parameters":{"x":1,"y":2,"zoom":3}}"#).unwrap();
        assert_eq!(f, UIAction::FlyTo(Camera { x: 1.0, y: 2.0, zoom: 3.0 }));
        let c = serde_json::to_string(&UIAction::ClearHighlight(NoParameters {})).unwrap();
        assert_eq!(c, r#"{"action_type":"clear_highlight","parameters":{}}"#);
        assert_eq!(serde_json::from_str::<UIAction>(&c).unwrap(), UIAction::ClearHighlight(NoParameters {}));
    }

    #[test]
    fn schema_violations_fail_to_decode() {
        for bad in [
            r#"{"action_type":"explode","parameters":[]}"#,
            r#"{"action_type":"set_year_filter","parameters":[2020]}"#,
            r#"{"action_type":"fly_to","parameters":{"x":1,"y":2}}"#,
            r#"{"action_type":"annotate","parameters":{"x":1,"y":2,"text":"a","extra":1}}"#,
        ] {
            assert!(serde_json::from_str::<UIAction>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn references_are_checked() {
        let ds = fixture();
        assert!(validate_action(&UIAction::HighlightClusters(vec![0, 1]), &ds).is_ok());
        assert!(validate_action(&UIAction::HighlightClusters(vec![7]), &ds).is_err());
        assert!(validate_action(&UIAction::HighlightClusters(vec![]), &ds).is_err());
        assert!(validate_action(&UIAction::PinPapers(vec!["1".into(), "x".into()]), &ds).is_err());
        assert!(validate_action(&UIAction::SetYearFilter([2021, 2020]), &ds).is_err());
        assert!(validate_action(&UIAction::FlyTo(Camera { x: 0.0, y: 0.0, zoom: 0.0 }), &ds).is_err());
        assert!(validate_action(&UIAction::ClearHighlight(NoParameters {}), &ds).is_ok());
    }
}

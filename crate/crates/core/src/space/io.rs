//! The JSON instance format: a space plus named subsets and fields.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Metric, PointRecord, ScalarField, SpaceInstance, SubsetMask};
use crate::error::{Error, Result};
use crate::instances::cantor::{enumerate_points, CantorPoint};

/// Serialized form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub name: String,
    pub resolution: f64,
    pub points: Vec<PointRecord>,
    pub metric: MetricDocument,
    #[serde(default)]
    pub subsets: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricDocument {
    Matrix { data: Vec<Vec<f64>> },
    Cantor { depth: usize },
    Euclidean { coords: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    pub domain: Vec<usize>,
    pub values: Vec<f64>,
}

/// A validated space together with its named subsets and fields.
#[derive(Debug)]
pub struct Instance {
    pub space: SpaceInstance,
    pub subsets: BTreeMap<String, SubsetMask>,
    pub fields: BTreeMap<String, ScalarField>,
}

impl Instance {
    pub fn bare(space: SpaceInstance) -> Self {
        Instance {
            space,
            subsets: BTreeMap::new(),
            fields: BTreeMap::new(),
        }
    }

    pub fn subset(&self, name: &str) -> Result<&SubsetMask> {
        self.subsets
            .get(name)
            .ok_or_else(|| Error::Precondition(format!("instance has no subset named {name:?}")))
    }

    pub fn field(&self, name: &str) -> Result<&ScalarField> {
        self.fields
            .get(name)
            .ok_or_else(|| Error::Precondition(format!("instance has no field named {name:?}")))
    }

    pub fn from_document(doc: InstanceDocument) -> Result<Self> {
        let metric = match doc.metric {
            MetricDocument::Matrix { data } => Metric::matrix(data)?,
            MetricDocument::Euclidean { coords } => Metric::euclidean(coords)?,
            MetricDocument::Cantor { depth } => {
                let points =
                    if doc.points.iter().all(|p| p.label.is_some()) && !doc.points.is_empty() {
                        let points = doc
                            .points
                            .iter()
                            .map(|p| CantorPoint::parse(p.label.as_deref().unwrap_or_default()))
                            .collect::<Result<Vec<_>>>()?;
                        if let Some(p) = points.iter().find(|p| p.head_len() > depth) {
                            return Err(Error::Schema(format!(
                                "Cantor point {} has a head longer than depth {depth}",
                                p.label()
                            )));
                        }
                        points
                    } else {
                        enumerate_points(depth)?
                    };
                Metric::cantor(depth, points)?
            }
        };
        let space = SpaceInstance::new(doc.name, doc.resolution, doc.points, metric)?;
        let mut subsets = BTreeMap::new();
        for (name, ids) in doc.subsets {
            let mask = SubsetMask::from_ids(&space, ids)
                .map_err(|e| Error::Schema(format!("subset {name:?}: {e}")))?;
            subsets.insert(name, mask);
        }
        let mut fields = BTreeMap::new();
        for (name, fd) in doc.fields {
            if fd.domain.len() != fd.values.len() {
                return Err(Error::Schema(format!(
                    "field {name:?} has {} domain ids but {} values",
                    fd.domain.len(),
                    fd.values.len()
                )));
            }
            let field = ScalarField::from_pairs(&space, fd.domain.into_iter().zip(fd.values))
                .map_err(|e| Error::Schema(format!("field {name:?}: {e}")))?;
            fields.insert(name, field);
        }
        Ok(Instance {
            space,
            subsets,
            fields,
        })
    }

    pub fn to_document(&self) -> InstanceDocument {
        let space = &self.space;
        let metric = match space.metric() {
            Metric::Matrix { n, data } => MetricDocument::Matrix {
                data: data.chunks(*n).map(<[f64]>::to_vec).collect(),
            },
            Metric::Cantor { depth, .. } => MetricDocument::Cantor { depth: *depth },
            Metric::Euclidean { dim, coords } => MetricDocument::Euclidean {
                coords: coords.chunks(*dim).map(<[f64]>::to_vec).collect(),
            },
        };
        InstanceDocument {
            name: space.name().to_string(),
            resolution: space.resolution(),
            points: space.points().to_vec(),
            metric,
            subsets: self
                .subsets
                .iter()
                .map(|(k, v)| (k.clone(), v.ids()))
                .collect(),
            fields: self
                .fields
                .iter()
                .map(|(k, f)| {
                    let (domain, values) = f.iter().unzip();
                    (k.clone(), FieldDocument { domain, values })
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("instance JSON: {e}")))?;
        Self::from_document(doc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn round_trips_every_metric_kind() {
        for inst in [
            instances::generate("cantor:4").unwrap(),
            instances::generate("ordinal:1:4").unwrap(),
            instances::generate("sequence:5").unwrap(),
        ] {
            let text = inst.to_json().unwrap();
            let back = Instance::from_json(&text).unwrap();
            assert_eq!(back.space.len(), inst.space.len());
            for i in 0..inst.space.len() {
                for j in 0..inst.space.len() {
                    assert_eq!(back.space.dist(i, j), inst.space.dist(i, j));
                }
            }
            assert_eq!(back.to_json().unwrap(), text);
        }
    }

    #[test]
    fn matrix_document_with_subsets_and_fields() {
        let text = r#"{
            "name": "tri", "resolution": 0.5,
            "points": [{"id": 0}, {"id": 1, "label": "b"}, {"id": 2}],
            "metric": {"type": "matrix", "data": [[0,1,1],[1,0,1],[1,1,0]]},
            "subsets": {"Y": [0, 2]},
            "fields": {"f": {"domain": [0, 2], "values": [0.25, -1]}}
        }"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.space.label(1), Some("b"));
        assert_eq!(inst.subset("Y").unwrap().ids(), vec![0, 2]);
        assert_eq!(inst.field("f").unwrap().get(2), Some(-1.0));
        assert!(inst.field("g").is_err());
    }

    #[test]
    fn schema_violations_are_reported() {
        let bad_ids = r#"{"name":"x","resolution":1,"points":[{"id":1}],
            "metric":{"type":"matrix","data":[[0]]}}"#;
        assert!(matches!(
            Instance::from_json(bad_ids),
            Err(Error::Schema(_))
        ));
        let bad_subset = r#"{"name":"x","resolution":1,"points":[{"id":0}],
            "metric":{"type":"matrix","data":[[0]]},"subsets":{"Y":[3]}}"#;
        assert!(matches!(
            Instance::from_json(bad_subset),
            Err(Error::Schema(_))
        ));
        let unknown_metric = r#"{"name":"x","resolution":1,"points":[{"id":0}],
            "metric":{"type":"taxicab"}}"#;
        assert!(matches!(
            Instance::from_json(unknown_metric),
            Err(Error::Schema(_))
        ));
    }
}

//! Writes the shipped fixtures into the directory given as the first argument.

use std::path::PathBuf;

use osc_core::instances;
use osc_core::space::io::{FieldDocument, InstanceDocument, MetricDocument};
use osc_core::{Instance, PointRecord};

fn main() -> osc_core::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let generated = [
        ("cantor-6", "cantor:6"),
        ("cantor-8", "cantor:8"),
        ("cantor-10", "cantor:10"),
        ("cantor-12", "cantor:12"),
        ("ordinal-1", "ordinal:1"),
        ("ordinal-2", "ordinal:2"),
        ("ordinal-3", "ordinal:3"),
        ("sequence-10", "sequence:10"),
        ("random-60", "random:7:60:2"),
    ];
    for (name, spec) in generated {
        let mut doc = instances::generate(spec)?.to_document();
        doc.name = name.into();
        Instance::from_document(doc)?.save(dir.join(format!("{name}.json")))?;
    }

    // y = 0 sees its only witness 0.5 inside Q, so splitting P ∪ Q loses it.
    let points = |n: usize| {
        (0..n)
            .map(|id| PointRecord { id, label: None })
            .collect::<Vec<_>>()
    };
    let union = InstanceDocument {
        name: "union-adversarial".into(),
        resolution: 0.5,
        points: points(3),
        metric: MetricDocument::Euclidean {
            coords: vec![vec![0.0], vec![0.5], vec![10.0]],
        },
        subsets: [("P".to_string(), vec![0, 2]), ("Q".to_string(), vec![1])].into(),
        fields: [
            (
                "f".to_string(),
                FieldDocument {
                    domain: vec![0, 1, 2],
                    values: vec![0.0, 1.0, 0.0],
                },
            ),
            (
                "zero".to_string(),
                FieldDocument {
                    domain: vec![0, 1, 2],
                    values: vec![0.0; 3],
                },
            ),
        ]
        .into(),
    };
    Instance::from_document(union)?.save(dir.join("union-adversarial.json"))?;

    // Deliberately invalid: d(0,2) = 3 > d(0,1) + d(1,2).
    let broken = InstanceDocument {
        name: "broken-triangle".into(),
        resolution: 0.5,
        points: points(3),
        metric: MetricDocument::Matrix {
            data: vec![
                vec![0.0, 1.0, 3.0],
                vec![1.0, 0.0, 1.0],
                vec![3.0, 1.0, 0.0],
            ],
        },
        subsets: Default::default(),
        fields: Default::default(),
    };
    let text = serde_json::to_string_pretty(&broken)?;
    std::fs::write(dir.join("broken-triangle.json"), text + "\n")?;
    Ok(())
}

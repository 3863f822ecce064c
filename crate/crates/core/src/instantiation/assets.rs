use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::types::{AttributeVector, ObjectSpec, Range, SizeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArticulationSpec {
    pub joint_name: String,
    pub axis: Axis,
    pub range: Range,
    /// Normalized opening in `[0, 1]` at reset.
    #[serde(default)]
    pub initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetRecord {
    pub uid: String,
    pub query_keys: Vec<String>,
    pub attribute_vector: AttributeVector,
    pub nominal_half_extents: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container_cavity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub articulations: Option<Vec<ArticulationSpec>>,
    /// Offset of the mesh's geometric center from its file origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_center: Option<[f64; 3]>,
}

impl AssetRecord {
    /// Largest full dimension of the nominal box.
    pub fn largest_dimension(&self) -> f64 {
        2.0 * self.nominal_half_extents.iter().copied().fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<()> {
        if self.nominal_half_extents.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Invariant(alloc::format!("{}: half extents must be positive", self.uid)));
        }
        if let Some(c) = self.container_cavity {
            if c.iter().zip(self.nominal_half_extents).any(|(c, h)| !(*c > 0.0) || *c > h) {
                return Err(Error::Invariant(alloc::format!("{}: cavity must fit inside extents", self.uid)));
            }
        }
        Ok(())
    }
}

/// Chooses one catalog record per spec. Candidates match the query key
/// case-insensitively and have a nominal size inside the spec's interval;
/// they are ordered by uid and one is drawn with a per-instance seed.
pub fn resolve_assets<'a>(
    specs: impl IntoIterator<Item = &'a ObjectSpec>,
    catalog: &'a [AssetRecord],
    seed: u64,
) -> Result<BTreeMap<String, &'a AssetRecord>> {
    if catalog.is_empty() {
        return Err(Error::Precondition("catalog is empty".into()));
    }
    let mut out = BTreeMap::new();
    for spec in specs {
        let q = spec.asset_query.to_lowercase();
        let mut cands: Vec<&AssetRecord> = catalog
            .iter()
            .filter(|r| r.query_keys.iter().any(|k| k.to_lowercase() == q))
            .filter(|r| {
                let d = r.largest_dimension();
                d >= spec.estimated_size[0] - 1e-9 && d <= spec.estimated_size[1] + 1e-9
            })
            .collect();
        if cands.is_empty() {
            return Err(Error::NoAssetFound(spec.instance_name.clone()));
        }
        cands.sort_by(|a, b| a.uid.cmp(&b.uid));
        let mut rng = seed::rng(seed, &alloc::format!("resolve:{}", spec.instance_name));
        let pick = if cands.len() == 1 { 0 } else { rng.gen_range(0..cands.len()) };
        out.insert(spec.instance_name.clone(), cands[pick]);
    }
    Ok(out)
}

/// Hand-reviewed corrections for one asset. Every present field replaces
/// the computed value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_extents: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container_cavity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub articulations: Option<Vec<ArticulationSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_vector: Option<AttributeVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

pub fn parse_override(uid: &str, text: &str) -> Result<AssetOverride> {
    serde_json::from_str(text).map_err(|e| Error::OverrideParse { uid: uid.to_string(), reason: e.to_string() })
}

/// A catalog asset fitted to one object spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAsset {
    pub uid: String,
    pub half_extents: [f64; 3],
    /// Applied re-centering shift; the collision box is centered at the origin.
    pub center_offset: [f64; 3],
    pub container_cavity: Option<[f64; 3]>,
    pub articulations: Vec<ArticulationSpec>,
    pub attribute_vector: AttributeVector,
    pub mass: f64,
}

fn sample(rng: &mut impl Rng, r: Range) -> f64 {
    if r[1] > r[0] {
        rng.gen_range(r[0]..=r[1])
    } else {
        r[0]
    }
}

pub fn normalize_asset(
    r: &AssetRecord,
    spec: &ObjectSpec,
    seed: u64,
    over: Option<&AssetOverride>,
) -> NormalizedAsset {
    let mut rng = seed::rng(seed, &alloc::format!("normalize:{}", spec.instance_name));
    let size = sample(&mut rng, spec.estimated_size);
    let mass = sample(&mut rng, spec.estimated_mass);
    let k = size / r.largest_dimension();
    let scale = |v: [f64; 3]| [v[0] * k, v[1] * k, v[2] * k];
    let mesh = r.mesh_center.unwrap_or([0.0; 3]);
    let mut attrs = r.attribute_vector.clone();
    attrs.size_class = SizeClass::from_range(spec.estimated_size);
    let mut out = NormalizedAsset {
        uid: r.uid.clone(),
        half_extents: scale(r.nominal_half_extents),
        center_offset: scale([-mesh[0], -mesh[1], -mesh[2]]),
        container_cavity: r.container_cavity.map(scale),
        articulations: r.articulations.clone().unwrap_or_default(),
        attribute_vector: attrs,
        mass,
    };
    if let Some(o) = over {
        if let Some(h) = o.half_extents {
            out.half_extents = h;
        }
        if let Some(c) = o.container_cavity {
            out.container_cavity = Some(c);
        }
        if let Some(a) = &o.articulations {
            out.articulations = a.clone();
        }
        if let Some(a) = &o.attribute_vector {
            out.attribute_vector = a.clone();
        }
        if let Some(m) = o.mass {
            out.mass = m;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ColorClass, ShapeClass};
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn apple(uid: &str, d: f64) -> AssetRecord {
        AssetRecord {
            uid: uid.into(),
            query_keys: vec!["red apple".into(), "apple".into()],
            attribute_vector: AttributeVector {
                color_class: ColorClass::Red,
                shape_class: ShapeClass::Sphere,
                size_class: SizeClass::Medium,
                category: "apple".into(),
            },
            nominal_half_extents: [d / 2.0; 3],
            container_cavity: None,
            articulations: None,
            mesh_center: None,
        }
    }

    fn spec(size: Range) -> ObjectSpec {
        ObjectSpec {
            instance_name: "apple".into(),
            description: String::new(),
            asset_query: "Red Apple".into(),
            estimated_mass: [0.15, 0.2],
            estimated_size: size,
            tags: vec![],
        }
    }

    #[test]
    fn one_to_many_over_seeds() {
        let cat = vec![apple("b", 0.08), apple("a", 0.08), apple("c", 0.085)];
        let s = spec([0.07, 0.1]);
        let uids: BTreeSet<_> = (0..100).map(|seed| resolve_assets([&s], &cat, seed).unwrap()["apple"].uid.clone()).collect();
        assert!(uids.len() >= 2);
        let a = resolve_assets([&s], &cat, 5).unwrap()["apple"].uid.clone();
        assert_eq!(a, resolve_assets([&s], &cat, 5).unwrap()["apple"].uid);
    }

    #[test]
    fn size_filter_and_missing_asset() {
        let cat = vec![apple("a", 0.3)];
        assert_eq!(resolve_assets([&spec([0.07, 0.1])], &cat, 0).unwrap_err(), Error::NoAssetFound("apple".into()));
    }

    #[test]
    fn rescale_to_sampled_size() {
        let mut r = apple("a", 0.2);
        r.nominal_half_extents = [0.1, 0.05, 0.05];
        let n = normalize_asset(&r, &spec([0.1, 0.1]), 3, None);
        for (a, b) in n.half_extents.iter().zip([0.05, 0.025, 0.025]) {
            assert!((a - b).abs() < 1e-12);
        }
        let m = normalize_asset(&r, &spec([0.1, 0.1]), 99, None);
        assert_eq!(n.half_extents, m.half_extents);
    }

    #[test]
    fn override_applies_last() {
        let r = apple("a", 0.08);
        let o = parse_override("a", r#"{"container_cavity": [0.01, 0.02, 0.03]}"#).unwrap();
        let n = normalize_asset(&r, &spec([0.07, 0.1]), 0, Some(&o));
        assert_eq!(n.container_cavity, Some([0.01, 0.02, 0.03]));
        assert!(matches!(parse_override("a", "{\"cavity\": 1}"), Err(Error::OverrideParse { .. })));
    }
}

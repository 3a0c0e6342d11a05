use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde_json::Value;

use super::{GeoRepError, GeoRepNetwork};
use crate::scalar::Scalar;

const PALETTE: [&str; 12] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
];

const ISO_KEYS: [&str; 4] = ["iso3", "ISO_A3", "ADM0_A3", "iso_a3"];

fn tree_pairs<T: Scalar>(net: &GeoRepNetwork<T>) -> BTreeSet<(usize, usize)> {
    net.tree_edges
        .iter()
        .filter_map(|e| {
            let (a, b) = (net.index_of(e.a)?, net.index_of(e.b)?);
            Some((a.min(b), a.max(b)))
        })
        .collect()
}

/// Graphviz rendering of the tree (or of every positive pair when no tree has
/// been computed). Edge labels carry the weight, node fill the community.
pub fn to_dot<T: Scalar>(net: &GeoRepNetwork<T>) -> String {
    let mut out = String::from("graph georep {\n  node [style=filled];\n");
    for c in &net.nodes {
        match net.communities.get(c) {
            Some(&k) => {
                let _ = writeln!(out, "  \"{c}\" [fillcolor=\"{}\", community={k}];", PALETTE[k % PALETTE.len()]);
            }
            None => {
                let _ = writeln!(out, "  \"{c}\" [fillcolor=\"#ffffff\"];");
            }
        }
    }
    let n = net.len();
    let edges: Vec<(usize, usize)> = if net.tree_edges.is_empty() {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| net.similarity(i, j) > T::zero()).collect()
    } else {
        tree_pairs(net).into_iter().collect()
    };
    for (i, j) in edges {
        let w = net.similarity(i, j);
        let _ = writeln!(out, "  \"{}\" -- \"{}\" [label=\"{:.3}\", weight={}];", net.nodes[i], net.nodes[j], w, w);
    }
    out.push_str("}\n");
    out
}

/// Edge list `src,dst,weight,in_tree` over every positive-similarity pair.
pub fn to_csv<T: Scalar>(net: &GeoRepNetwork<T>) -> String {
    let tree = tree_pairs(net);
    let mut out = String::from("src,dst,weight,in_tree\n");
    let n = net.len();
    for i in 0..n {
        for j in i + 1..n {
            let w = net.similarity(i, j);
            if w > T::zero() {
                let _ = writeln!(out, "{},{},{},{}", net.nodes[i], net.nodes[j], w, tree.contains(&(i, j)));
            }
        }
    }
    out
}

/// Copies a boundary FeatureCollection and sets `properties.community` on
/// every feature (null when the country is not a network node).
pub fn to_geojson<T: Scalar>(net: &GeoRepNetwork<T>, boundaries: &Value) -> Result<Value, GeoRepError> {
    if boundaries.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(GeoRepError::Invalid("boundary file is not a FeatureCollection".into()));
    }
    let mut out = boundaries.clone();
    let features = out
        .get_mut("features")
        .and_then(Value::as_array_mut)
        .ok_or_else(|| GeoRepError::Invalid("FeatureCollection has no features array".into()))?;
    for f in features.iter_mut() {
        let props = match f.get_mut("properties") {
            Some(Value::Object(p)) => p,
            _ => {
                f["properties"] = Value::Object(Default::default());
                f["properties"].as_object_mut().expect("just inserted")
            }
        };
        let iso = ISO_KEYS.iter().find_map(|k| props.get(*k).and_then(Value::as_str)).map(str::to_owned);
        let community = iso
            .and_then(|s| s.parse().ok())
            .and_then(|c| net.communities.get(&c))
            .map_or(Value::Null, |&k| Value::from(k));
        props.insert("community".into(), community);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::country::CountryCode;
    use crate::georep::TreeEdge;
    use serde_json::json;

    fn net() -> GeoRepNetwork<f64> {
        let cc = |s| CountryCode::new(s).unwrap();
        GeoRepNetwork {
            nodes: vec![cc("DEU"), cc("FRA"), cc("ITA")],
            sim: vec![1.0, 0.5, 0.25, 0.5, 1.0, 0.0, 0.25, 0.0, 1.0],
            tree_edges: vec![TreeEdge { a: cc("DEU"), b: cc("FRA"), weight: 0.5 }, TreeEdge { a: cc("DEU"), b: cc("ITA"), weight: 0.25 }],
            communities: [(cc("DEU"), 0), (cc("FRA"), 0), (cc("ITA"), 1)].into_iter().collect(),
        }
    }

    #[test]
    fn csv_lists_positive_pairs() {
        assert_eq!(to_csv(&net()), "src,dst,weight,in_tree\nDEU,FRA,0.5,true\nDEU,ITA,0.25,true\n");
    }

    #[test]
    fn dot_has_nodes_and_tree_edges() {
        let dot = to_dot(&net());
        assert!(dot.starts_with("graph georep {"));
        assert!(dot.contains("\"ITA\" [fillcolor=\"#ffffb3\", community=1];"));
        assert!(dot.contains("\"DEU\" -- \"FRA\" [label=\"0.500\""));
        assert_eq!(dot.matches(" -- ").count(), 2);
    }

    #[test]
    fn geojson_pass_through() {
        let b = json!({"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {"ISO_A3": "ITA"}, "geometry": null},
            {"type": "Feature", "properties": {"iso3": "ESP"}, "geometry": {"type": "Point", "coordinates": [0, 0]}},
            {"type": "Feature", "geometry": null}
        ]});
        let g = to_geojson(&net(), &b).unwrap();
        assert_eq!(g["features"][0]["properties"]["community"], json!(1));
        assert_eq!(g["features"][1]["properties"]["community"], Value::Null);
        assert_eq!(g["features"][1]["geometry"], b["features"][1]["geometry"]);
        assert_eq!(g["features"][2]["properties"]["community"], Value::Null);
        assert!(to_geojson(&net(), &json!({"type": "Feature"})).is_err());
    }
}

use std::fmt::Write;

use super::{DecisionTree, FeatureSpec, Node, TreeEnsemble};

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

fn write_nodes(out: &mut String, tree: &DecisionTree, features: &[FeatureSpec], prefix: &str, indent: &str) {
    for (slot, node) in tree.nodes().iter().enumerate() {
        match node {
            Node::Split {
                feature, threshold, ..
            } => {
                let name = features
                    .get(*feature)
                    .map(|f| f.name.as_str())
                    .unwrap_or("?");
                let _ = writeln!(
                    out,
                    "{indent}{prefix}n{slot} [shape=box, label=\"{} < {threshold:.2}\"];",
                    escape(name)
                );
            }
            Node::Leaf { action, visits } => {
                let _ = writeln!(
                    out,
                    "{indent}{prefix}n{slot} [shape=ellipse, label=\"{action:.2}\\nvisits: {visits}\"];"
                );
            }
        }
    }
    for (slot, node) in tree.nodes().iter().enumerate() {
        if let Node::Split { left, right, .. } = node {
            let _ = writeln!(out, "{indent}{prefix}n{slot} -> {prefix}n{left} [label=\"true\"];");
            let _ = writeln!(out, "{indent}{prefix}n{slot} -> {prefix}n{right} [label=\"false\"];");
        }
    }
}

/// Graphviz digraph of one tree. Split nodes read `feature < threshold`;
/// the `true` edge is the left branch.
pub fn tree_to_dot(tree: &DecisionTree, features: &[FeatureSpec]) -> String {
    let mut out = String::from("digraph tree {\n  node [fontname=\"Helvetica\"];\n");
    write_nodes(&mut out, tree, features, "", "  ");
    out.push_str("}\n");
    out
}

/// One cluster per channel, labelled with the channel's action name.
pub fn ensemble_to_dot(ensemble: &TreeEnsemble) -> String {
    let mut out = String::from("digraph ensemble {\n  node [fontname=\"Helvetica\"];\n");
    for (k, ch) in ensemble.channels.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{k} {{");
        let _ = writeln!(out, "    label=\"{}\";", escape(&ch.action.name));
        write_nodes(&mut out, &ch.tree, &ensemble.features, &format!("c{k}_"), "    ");
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
